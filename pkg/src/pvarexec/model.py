"""Domain types, profile ingestion and order validation.

Volatilities are stored already normalised by the square root of the pillar
length, so the time step never appears downstream.  Pillars are numbered from
1 in every public field; arrays are 0-based.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InfeasibleOrderError, OrderError, ProfileError


class Benchmark(str, enum.Enum):
    TC = "tc"
    IS = "is"

    @classmethod
    def parse(cls, value) -> "Benchmark":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise OrderError(f"unknown benchmark {value!r} (expected 'tc' or 'is')") from None


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MarketProfile:
    """Per-pillar expected volume and normalised volatility for one day."""

    volumes: np.ndarray
    volatilities: np.ndarray
    auction_volume: float = 0.0

    def __post_init__(self):
        v = _frozen_array(self.volumes)
        s = _frozen_array(self.volatilities)
        if v.ndim != 1 or s.ndim != 1:
            raise ProfileError("volume and volatility curves must be one-dimensional")
        if v.shape != s.shape:
            raise ProfileError(
                f"curve length mismatch: {v.size} volumes vs {s.size} volatilities"
            )
        if v.size < 2:
            raise ProfileError(f"need at least 2 pillars, got {v.size}")
        for i in range(v.size):
            if not (math.isfinite(v[i]) and v[i] > 0):
                raise ProfileError(f"non-positive volume at row {i + 1}", row=i + 1)
            if not (math.isfinite(s[i]) and s[i] > 0):
                raise ProfileError(f"non-positive volatility at row {i + 1}", row=i + 1)
        auction = float(self.auction_volume)
        if not (math.isfinite(auction) and auction >= 0):
            raise ProfileError(f"auction volume must be >= 0, got {auction}")
        object.__setattr__(self, "volumes", v)
        object.__setattr__(self, "volatilities", s)
        object.__setattr__(self, "auction_volume", auction)

    @property
    def n_pillars(self) -> int:
        return int(self.volumes.size)

    def reversed(self) -> "MarketProfile":
        return MarketProfile(self.volumes[::-1], self.volatilities[::-1], self.auction_volume)

    def __eq__(self, other):
        if not isinstance(other, MarketProfile):
            return NotImplemented
        return (
            np.array_equal(self.volumes, other.volumes)
            and np.array_equal(self.volatilities, other.volatilities)
            and self.auction_volume == other.auction_volume
        )

    __hash__ = None


@dataclass(frozen=True)
class ImpactParams:
    """Temporary impact ``h(v) = kappa * sigma * (v / V) ** gamma``."""

    kappa: float
    gamma: float

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class RiskSpec:
    """Risk aversion and p-variation exponent.

    Only ``p`` is stored; building from a self-similarity exponent goes
    through :meth:`from_hurst`, so both routes give identical objects.
    """

    lam: float
    p: float = 2.0

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"risk aversion must be >= 0, got {self.lam}")
        if not (self.p > 1 and math.isfinite(self.p)):
            raise ValueError(f"variation exponent must be > 1, got {self.p}")

    @classmethod
    def from_hurst(cls, lam: float, hurst: float) -> "RiskSpec":
        if not 0 < hurst < 1:
            raise ValueError(f"self-similarity exponent must lie in (0, 1), got {hurst}")
        return cls(lam=lam, p=1.0 / hurst)

    @property
    def hurst(self) -> float:
        return 1.0 / self.p


@dataclass(frozen=True)
class ExecutionOrder:
    total_quantity: float
    benchmark: Benchmark = Benchmark.TC
    pvol_cap: Optional[float] = None
    min_slice: float = 0.0
    auction_participation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "benchmark", Benchmark.parse(self.benchmark))


@dataclass(frozen=True)
class ValidatedOrder:
    """An order checked against a profile, with the auction split resolved."""

    order: ExecutionOrder
    auction_quantity: float
    continuous_quantity: float

    @property
    def total_quantity(self) -> float:
        return self.order.total_quantity

    @property
    def benchmark(self) -> Benchmark:
        return self.order.benchmark

    @property
    def pvol_cap(self) -> Optional[float]:
        return self.order.pvol_cap

    @property
    def min_slice(self) -> float:
        return self.order.min_slice


@dataclass(frozen=True, eq=False)
class Schedule:
    """Per-pillar trades produced by a solver.

    ``segment`` is the (first, last) pillar of the freely optimised stretch.
    ``switch_pillar`` is the segment boundary adjacent to the saturated
    pillars, or None when the participation cap never binds.
    """

    benchmark: Benchmark
    trades: np.ndarray
    auction_trade: float
    start_pillar: int
    stop_pillar: int
    segment: tuple[int, int]
    switch_pillar: Optional[int]
    saturated: np.ndarray
    alpha: float
    target: float
    trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "trades", _frozen_array(self.trades))
        sat = np.array(self.saturated, dtype=bool)
        sat.setflags(write=False)
        object.__setattr__(self, "saturated", sat)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.trades)

    @property
    def executed(self) -> float:
        return float(math.fsum(self.trades)) + self.auction_trade

    @property
    def residual(self) -> float:
        return abs(self.executed - self.target)

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (
            self.benchmark == other.benchmark
            and np.array_equal(self.trades, other.trades)
            and self.auction_trade == other.auction_trade
            and self.segment == other.segment
            and self.switch_pillar == other.switch_pillar
            and self.start_pillar == other.start_pillar
        )

    __hash__ = None


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_float(text: str, what: str, row: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ProfileError(f"cannot parse {what} {text!r} at row {row}", row=row) from None


def load_profile(
    path,
    *,
    auction_volume: float = 0.0,
    delimiter: str = ",",
    header: Optional[bool] = None,
) -> MarketProfile:
    """Read a ``pillar,volume,volatility`` CSV file.

    ``header=None`` detects a header row by whether the first cell parses as
    a number.  Rows may appear in any order; pillar indices must cover
    ``1..N`` exactly once.  Row numbers in errors count data rows from 1.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if header is None:
        header = bool(rows) and not _is_number(rows[0][0])
    if header:
        rows = rows[1:]

    by_pillar: dict[int, tuple[float, float, int]] = {}
    for row_no, row in enumerate(rows, start=1):
        if len(row) < 3:
            raise ProfileError(f"expected 3 columns at row {row_no}, got {len(row)}", row=row_no)
        raw_idx = _parse_float(row[0].strip(), "pillar index", row_no)
        if raw_idx != int(raw_idx):
            raise ProfileError(f"non-integer pillar index at row {row_no}", row=row_no)
        idx = int(raw_idx)
        volume = _parse_float(row[1].strip(), "volume", row_no)
        vol = _parse_float(row[2].strip(), "volatility", row_no)
        if idx in by_pillar:
            raise ProfileError(f"duplicate pillar index {idx} at row {row_no}", row=row_no)
        if not (math.isfinite(volume) and volume > 0):
            raise ProfileError(f"non-positive volume at row {row_no}", row=row_no)
        if not (math.isfinite(vol) and vol > 0):
            raise ProfileError(f"non-positive volatility at row {row_no}", row=row_no)
        by_pillar[idx] = (volume, vol, row_no)

    n = len(by_pillar)
    for expected in range(1, n + 1):
        if expected not in by_pillar:
            raise ProfileError(f"missing pillar index {expected}")
    volumes = [by_pillar[i][0] for i in range(1, n + 1)]
    vols = [by_pillar[i][1] for i in range(1, n + 1)]
    return MarketProfile(volumes, vols, auction_volume)


def write_profile(profile: MarketProfile, path, *, delimiter: str = ",") -> None:
    """Write the CSV read by :func:`load_profile`, exact to the last bit."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["pillar", "volume", "volatility"])
        for i, (v, s) in enumerate(zip(profile.volumes, profile.volatilities), start=1):
            w.writerow([i, format(float(v), ".17g"), format(float(s), ".17g")])


def u_shape_profile(
    n_pillars: int = 102,
    *,
    volume_scale: float = 100.0,
    vol_scale: float = 0.01,
    auction_volume: float = 0.0,
) -> MarketProfile:
    """Synthetic intraday curves ``scale * (1 + cos(2 pi (n-1)/(N-1))**2)``."""
    n = np.arange(1, n_pillars + 1)
    shape = 1.0 + np.cos(2.0 * np.pi * (n - 1) / (n_pillars - 1)) ** 2
    return MarketProfile(volume_scale * shape, vol_scale * shape, auction_volume)


def validate_order(order: ExecutionOrder, profile: MarketProfile) -> ValidatedOrder:
    """Check an order against a profile and split off the auction quantity.

    IS orders never trade in the closing auction, so their auction share is
    zero whatever participation was requested.
    """
    v_star = order.total_quantity
    if not (isinstance(v_star, (int, float)) and math.isfinite(v_star) and v_star > 0):
        raise OrderError(f"total quantity must be > 0, got {v_star!r}")
    if not (math.isfinite(order.min_slice) and order.min_slice >= 0):
        raise OrderError(f"minimum slice must be >= 0, got {order.min_slice!r}")
    part = order.auction_participation
    if not (math.isfinite(part) and 0.0 <= part <= 1.0):
        raise OrderError(f"auction participation must lie in [0, 1], got {part!r}")
    q = order.pvol_cap
    if q is not None:
        if not (math.isfinite(q) and 0.0 < q <= 1.0):
            raise OrderError(f"participation cap must lie in (0, 1], got {q!r}")
        capacity = q * float(np.sum(profile.volumes)) + q * profile.auction_volume
        if capacity < v_star:
            raise InfeasibleOrderError(
                f"order of {v_star:g} exceeds capacity {capacity:g} under participation cap {q:g}"
            )

    if order.benchmark is Benchmark.IS:
        auction = 0.0
    else:
        auction = part * profile.auction_volume
        if q is not None and part > q:
            raise OrderError(
                f"auction participation {part:g} exceeds participation cap {q:g}"
            )
    if auction > v_star:
        raise OrderError(f"auction quantity {auction:g} exceeds total quantity {v_star:g}")
    return ValidatedOrder(order, auction, v_star - auction)

