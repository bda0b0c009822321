"""Exponent sweeps, implied exponent inversion and the cross-sectional regression."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np

from .constraints import solve_tc
from .errors import ExecutionError, SingularDesignError, UnattainablePillarError
from .model import ImpactParams, MarketProfile, RiskSpec, Schedule


@dataclass(frozen=True)
class SweepRow:
    p: float
    start_pillar: Optional[int]
    switch_pillar: Optional[int]
    end_pillar: Optional[int]
    terminal_slope: float
    error: Optional[str] = None

    @property
    def hurst(self) -> float:
        return 1.0 / self.p


@dataclass(frozen=True)
class ImpliedPResult:
    instrument: str
    target_pillar: int
    implied_p: float
    achieved_pillar: int
    evaluations: int = 0


@dataclass(frozen=True)
class RegressionResult:
    intercept: float
    coef_impact: float
    coef_vol: float
    r_squared: float
    stderr: tuple[float, float, float]


def terminal_slope(schedule: Schedule) -> float:
    """Slope of the cumulative curve at the last freely optimised pillar, per share ordered."""
    if schedule.segment is None:
        return math.nan
    end = schedule.segment[1]
    return float(schedule.trades[end - 1]) / schedule.target


def _sweep_one(p, order, profile, impact, lam) -> SweepRow:
    try:
        sched = solve_tc(order, profile, impact, RiskSpec(lam, p))
    except ExecutionError as exc:
        return SweepRow(p, None, None, None, math.nan, f"{type(exc).__name__}: {exc}")
    end = sched.segment[1] if sched.segment is not None else None
    return SweepRow(p, sched.start_pillar, sched.switch_pillar, end, terminal_slope(sched))


def sweep_p(
    order,
    profile: MarketProfile,
    impact: ImpactParams,
    lam: float,
    p_grid: Sequence[float],
    workers: int = 1,
) -> list[SweepRow]:
    """Solve the TC problem once per exponent; rows follow the grid order.

    Solver failures are recorded in the row's ``error`` field.
    """
    grid = [float(p) for p in p_grid]
    if any(p <= 1 for p in grid):
        raise ValueError("every exponent must be > 1")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("exponent grid must be strictly ascending")
    fn = partial(_sweep_one, order=order, profile=profile, impact=impact, lam=lam)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, grid))
    return [fn(p) for p in grid]


def start_pillar(order, profile, impact, lam, p) -> int:
    return solve_tc(order, profile, impact, RiskSpec(lam, p)).start_pillar


def implied_p(
    order,
    profile: MarketProfile,
    impact: ImpactParams,
    lam: float,
    target_pillar: int,
    p_bounds: tuple[float, float] = (1.2, 4.0),
    tol: float = 1e-3,
    instrument: str = "",
) -> ImpliedPResult:
    """Largest exponent whose optimal TC start pillar equals ``target_pillar``.

    The start pillar is a nondecreasing step function of the exponent, so the
    right edge of the step at ``target_pillar`` is found by bisecting on
    "start <= target", then pushed right in increments of ``tol`` while the
    start pillar is unchanged.
    """
    p_lo, p_hi = map(float, p_bounds)
    if not 1 < p_lo < p_hi:
        raise ValueError(f"invalid exponent bounds {p_bounds}")
    calls = 0

    def n0(p):
        nonlocal calls
        calls += 1
        return start_pillar(order, profile, impact, lam, p)

    n_lo, n_hi = n0(p_lo), n0(p_hi)
    if not n_lo <= target_pillar <= n_hi:
        raise UnattainablePillarError(
            f"start pillar {target_pillar} outside attainable range [{n_lo}, {n_hi}] "
            f"for exponents in [{p_lo:g}, {p_hi:g}]",
            (n_lo, n_hi),
        )
    if n_hi == target_pillar:
        return ImpliedPResult(instrument, target_pillar, p_hi, n_hi, calls)

    lo, hi, n_at_lo = p_lo, p_hi, n_lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        n_mid = n0(mid)
        if n_mid <= target_pillar:
            lo, n_at_lo = mid, n_mid
        else:
            hi = mid
    if n_at_lo != target_pillar:
        raise UnattainablePillarError(
            f"start pillar jumps over {target_pillar} near p={lo:.6g} "
            f"(from {n_at_lo} to a later pillar)",
            (n_lo, n_hi),
        )
    p = lo
    while p + tol < p_hi and n0(p + tol) == target_pillar:
        p += tol
    return ImpliedPResult(instrument, target_pillar, p, n_at_lo, calls)


def mean_impact(schedule: Schedule, profile: MarketProfile, impact: ImpactParams) -> float:
    """Trade-weighted average of the per-pillar impact ``kappa sigma (v/V)^gamma``."""
    v = schedule.trades
    h = impact.kappa * profile.volatilities * (v / profile.volumes) ** impact.gamma
    return float(np.sum(v * h) / np.sum(v))


def mean_volatility(profile: MarketProfile, annualisation: float = 1.0) -> float:
    return float(np.mean(profile.volatilities)) * annualisation


def implied_p_regression(rows) -> RegressionResult:
    """OLS of implied exponent on mean impact and mean volatility.

    ``rows`` is an iterable of ``(implied_p, mean_impact, mean_volatility)``.
    """
    data = np.asarray(list(rows), dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("rows must be (implied_p, mean_impact, mean_volatility) triples")
    n = data.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 rows, got {n}")
    y = data[:, 0]
    X = np.column_stack([np.ones(n), data[:, 1], data[:, 2]])
    if np.linalg.matrix_rank(X) < 3:
        raise SingularDesignError("regressors are collinear")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    ss_res = float(resid @ resid)
    centred = y - y.mean()
    ss_tot = float(centred @ centred)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    if n > 3:
        sigma2 = ss_res / (n - 3)
        cov = sigma2 * np.linalg.inv(X.T @ X)
        se = tuple(float(math.sqrt(max(c, 0.0))) for c in np.diag(cov))
    else:
        se = (math.nan, math.nan, math.nan)
    return RegressionResult(float(beta[0]), float(beta[1]), float(beta[2]), r2, se)
