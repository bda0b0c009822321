"""Participation-capped TC and IS schedules with an optimal start (stop) pillar.

TC procedure:

1. Take the auction quantity off the top; the rest is traded continuously.
2. Shoot the TC curve over the window ``[n0, n1]`` (initially ``[1, N]``).
3. While any slice exceeds its cap ``q * V_n``, pin the last window pillar at
   its cap, remove that quantity from the target and shrink the window.  If
   pinning would take more than the order (a violation caused by a volume gap
   inside the window), re-shoot instead with every slice clamped to its cap.
4. If the smallest active slice is below ``min_slice``, advance ``n0`` by one,
   seed the new curve with what the previous one had executed up to the new
   start, and go back to 2 (the window end is kept).

IS runs the same procedure on the time-reversed day: the saturated block sits
at the open and the stop pillar moves earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleOrderError, MinSliceUnattainableError
from .model import (
    Benchmark,
    ExecutionOrder,
    ImpactParams,
    MarketProfile,
    RiskSpec,
    Schedule,
    ValidatedOrder,
    validate_order,
)
from .shooting import DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE, ShootingProblem, shoot


@dataclass(frozen=True)
class ConstraintConfig:
    pvol_cap: Optional[float] = None
    min_slice: float = 0.0
    auction_participation: float = 0.0
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    @classmethod
    def from_order(cls, order, **kwargs) -> "ConstraintConfig":
        if isinstance(order, ValidatedOrder):
            order = order.order
        return cls(order.pvol_cap, order.min_slice, order.auction_participation, **kwargs)


@dataclass(frozen=True)
class TraceRow:
    """One solver event; pillars are reported in calendar order.

    Events: ``shoot``, ``clamp`` (re-shoot with capped slices), ``saturate``,
    ``advance`` (start moved), ``accept`` and ``unattainable``.
    """

    step: int
    event: str
    start: int
    end: int
    alpha: float
    target: float
    residual: float
    min_slice: float

    FIELDS = ("step", "event", "start", "end", "alpha", "target", "residual", "min_slice")

    def as_row(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


def _resolve(order, profile, config, benchmark):
    if isinstance(order, ExecutionOrder):
        if order.benchmark is not benchmark:
            order = ExecutionOrder(
                order.total_quantity, benchmark, order.pvol_cap,
                order.min_slice, order.auction_participation,
            )
    else:
        order = order.order
    if config is not None:
        order = ExecutionOrder(
            order.total_quantity, benchmark, config.pvol_cap,
            config.min_slice, config.auction_participation,
        )
    else:
        config = ConstraintConfig.from_order(order)
    return validate_order(order, profile), config


class _Mirror:
    """Maps roll positions (1 = first pillar the curve reaches) to pillars."""

    def __init__(self, n: int, backward: bool):
        self.n = n
        self.backward = backward

    def pillar(self, pos: int) -> int:
        return self.n + 1 - pos if self.backward else pos

    def window(self, a: int, b: int) -> tuple[int, int]:
        return (self.pillar(b), self.pillar(a)) if self.backward else (a, b)

    def to_pillar_order(self, arr: np.ndarray) -> np.ndarray:
        return arr[::-1].copy() if self.backward else arr

    def to_roll_order(self, arr: np.ndarray) -> np.ndarray:
        return arr[::-1] if self.backward else arr


def _solve(validated: ValidatedOrder, profile, impact, risk, config, benchmark) -> Schedule:
    N = profile.n_pillars
    backward = benchmark is Benchmark.IS
    mirror = _Mirror(N, backward)
    q = config.pvol_cap
    vols = mirror.to_roll_order(np.asarray(profile.volumes))
    caps = q * vols if q is not None else np.full(N, math.inf)
    total = validated.continuous_quantity
    v_star = validated.total_quantity
    tol = config.tolerance
    min_slice = config.min_slice

    trace: list[TraceRow] = []

    def log(event, a, b, alpha, target, residual, smallest):
        lo, hi = mirror.window(a, b) if a <= b else (0, 0)
        trace.append(TraceRow(len(trace), event, lo, hi, alpha, target, residual, smallest))

    a, b = 1, N
    tail = 0.0  # quantity pinned at caps on positions b+1..N
    guess = None
    best = None
    while True:
        clamp = False
        clamped = np.zeros(0, dtype=bool)
        # saturation loop for the current start
        while True:
            if b < a:
                window = np.zeros(0)
                alpha = 0.0
                target = total - tail
                if abs(target) > tol * total:
                    raise InfeasibleOrderError(
                        f"participation cap saturates every pillar from {mirror.pillar(a)} "
                        f"yet {target:g} shares remain"
                    )
                break
            target = total - tail
            window_caps = tuple(mirror.to_pillar_order(caps[a - 1:b])) if clamp else None
            res = shoot(
                ShootingProblem(target, mirror.window(a, b), tol, config.max_iterations, window_caps),
                profile, impact, risk, benchmark, guess=guess,
            )
            guess = None
            window = mirror.to_roll_order(res.fragment)
            alpha = res.alpha
            clamped = mirror.to_roll_order(res.capped) if clamp else np.zeros(b - a + 1, dtype=bool)
            over = window > caps[a - 1:b]
            if a == b and window[0] >= caps[a - 1] - tol * total:
                # a lone pillar at its cap is saturated, not a TC segment
                over[0] = True
            log("clamp" if clamp else "shoot", a, b, alpha, target,
                abs(math.fsum(window) - target), float(window.min()))
            if not over.any():
                break
            new_tail = math.fsum(caps[b - 1:])
            if a < b and new_tail > total:
                clamp = True
                continue
            tail = new_tail
            b -= 1
            log("saturate", a, b, alpha, target, 0.0, float(caps[b]))

        roll_trades = np.zeros(N)
        roll_trades[a - 1:b] = window
        roll_trades[b:] = caps[b:]
        roll_saturated = np.zeros(N, dtype=bool)
        roll_saturated[b:] = True
        if a <= b:
            roll_saturated[a - 1:b] = clamped
        active = roll_trades[a - 1:]
        smallest = float(active.min())
        sched = _schedule(
            validated, benchmark, mirror, roll_trades, roll_saturated, a, b, alpha, tuple(trace)
        )
        if best is None or smallest > best[0]:
            best = (smallest, sched)
        if min_slice <= 0 or smallest >= min_slice:
            log("accept", a, b, alpha, target, sched.residual, smallest)
            return _schedule(
                validated, benchmark, mirror, roll_trades, roll_saturated, a, b, alpha, tuple(trace)
            )
        if a >= b:
            log("unattainable", a, b, alpha, target, sched.residual, smallest)
            raise MinSliceUnattainableError(
                f"smallest slice {smallest:g} stays below the minimum {min_slice:g} "
                f"for every start pillar",
                best=best[1],
            )
        if math.fsum(caps[a:]) < total - tol * total:
            log("unattainable", a, b, alpha, target, sched.residual, smallest)
            raise MinSliceUnattainableError(
                f"smallest slice {best[0]:g} stays below the minimum {min_slice:g}; "
                f"starting after pillar {mirror.pillar(a)} breaks the participation cap",
                best=best[1],
            )
        # fold what was executed up to the new start into the new seed
        guess = float(window[0] + window[1])
        a += 1
        log("advance", a, b, guess, total - tail, 0.0, smallest)


def _schedule(validated, benchmark, mirror, roll_trades, roll_saturated, a, b, alpha, trace) -> Schedule:
    N = roll_trades.size
    trades = mirror.to_pillar_order(roll_trades)
    saturated = mirror.to_pillar_order(roll_saturated)
    if a <= b:
        segment = mirror.window(a, b)
        switch = (segment[0] if mirror.backward else segment[1]) if b < N else None
    else:
        segment = None
        switch = None
    if mirror.backward:
        start_pillar, stop_pillar = 1, mirror.pillar(a)
    else:
        start_pillar, stop_pillar = a, N
    return Schedule(
        benchmark=benchmark,
        trades=trades,
        auction_trade=validated.auction_quantity,
        start_pillar=start_pillar,
        stop_pillar=stop_pillar,
        segment=segment,
        switch_pillar=switch,
        saturated=saturated,
        alpha=alpha,
        target=validated.total_quantity,
        trace=trace,
    )


def solve_tc(
    order,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    config: Optional[ConstraintConfig] = None,
) -> Schedule:
    """Optimal TC schedule under the order's participation and slice constraints."""
    validated, config = _resolve(order, profile, config, Benchmark.TC)
    return _solve(validated, profile, impact, risk, config, Benchmark.TC)


def solve_is(
    order,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    config: Optional[ConstraintConfig] = None,
) -> Schedule:
    """Optimal IS schedule: the TC procedure on the reversed day, no auction leg."""
    validated, config = _resolve(order, profile, config, Benchmark.IS)
    return _solve(validated, profile, impact, risk, config, Benchmark.IS)


def solve(order, profile, impact, risk, config=None) -> Schedule:
    bench = order.benchmark if isinstance(order, (ExecutionOrder, ValidatedOrder)) else Benchmark.TC
    if bench is Benchmark.IS:
        return solve_is(order, profile, impact, risk, config)
    return solve_tc(order, profile, impact, risk, config)
