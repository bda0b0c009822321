"""Shooting on the seed trade so a rolled curve hits a target quantity.

The TC (or IS) recursion is fully determined by the trade at the first (last)
pillar of its window.  The executed total is continuous and strictly
increasing in that seed, so bisection on ``[0, target]`` finds it.

With a sub-quadratic risk exponent the optimal seed can sit hundreds of
orders of magnitude below the target, so the bracket floor is located by
exponential probing and wide brackets are split geometrically.  When even
the smallest positive double overshoots, the search continues on log seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvariantError, NumericOverflowError, ShootingError
from .model import Benchmark
from .recursion import Roller

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 200


@dataclass(frozen=True)
class ShootingProblem:
    target: float
    window: tuple[int, int]
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    # per-pillar ceilings over the window; slices are clamped to them while rolling
    caps: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not (self.target >= 0 and math.isfinite(self.target)):
            raise ValueError(f"target must be >= 0, got {self.target}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.window[0] > self.window[1]:
            raise ValueError(f"empty window {self.window}")
        if self.caps is not None and len(self.caps) != self.window[1] - self.window[0] + 1:
            raise ValueError("caps must cover the window")


@dataclass(frozen=True)
class ShootingResult:
    alpha: float
    fragment: np.ndarray
    iterations: int
    bracket: tuple[float, float]
    # set only when the seed lies below the float range and ``alpha`` reads 0
    log_alpha: Optional[float] = None
    # pillars held at their cap, for problems with caps
    capped: Optional[np.ndarray] = None

    @property
    def executed(self) -> float:
        return math.fsum(self.fragment)


def shoot(
    problem: ShootingProblem,
    profile,
    impact,
    risk,
    direction=Benchmark.TC,
    guess: Optional[float] = None,
) -> ShootingResult:
    """Find the seed whose rolled fragment sums to ``problem.target``.

    TC seeds the first pillar of the window, IS the last.  ``guess`` (if it
    lies strictly inside the bracket) is probed first to narrow the bracket.
    The fragment is returned in ascending pillar order.
    """
    direction = Benchmark.parse(direction)
    n0, n1 = problem.window
    backward = direction is Benchmark.IS
    roller = Roller(profile, impact, risk, n0, n1, backward=backward)
    B = float(problem.target)
    tol = problem.tolerance * B
    width = n1 - n0 + 1

    caps = None
    if problem.caps is not None:
        caps = [float(c) for c in problem.caps]
        if backward:
            caps.reverse()

    def in_pillar_order(seq):
        return np.array(seq[::-1] if backward else seq)

    def result(alpha, iterations, bracket):
        if caps is None:
            return ShootingResult(alpha, in_pillar_order(roller.roll(alpha)), iterations, bracket)
        out, hit = roller.roll_clamped(alpha, caps)
        return ShootingResult(
            alpha, in_pillar_order(out), iterations, bracket, capped=in_pillar_order(hit)
        )

    if B == 0.0:
        return result(0.0, 0, (0.0, 0.0))
    if width == 1:
        return result(B, 1, (B, B))

    def miss(alpha):
        try:
            if caps is None:
                trades = roller.roll(alpha, stop_above=B + tol)
            else:
                trades = roller.roll_clamped(alpha, caps, stop_above=B + tol)[0]
        except NumericOverflowError:
            return math.inf
        return math.fsum(trades) - B

    lo, hi = 0.0, B
    f_lo, f_hi = miss(lo), miss(hi)
    # capped slices can need a seed above the target to fill the window
    while caps is not None and f_hi < 0.0 and hi < 1e300:
        lo, hi = hi, 16.0 * hi
        f_hi = miss(hi)
    if not (f_lo <= 0.0 <= f_hi):
        raise InvariantError(
            f"bracket [0, {hi:g}] does not straddle the target (misses {f_lo:g}, {f_hi:g})"
        )
    iterations = 0
    if guess is not None and lo < guess < hi:
        iterations += 1
        f = miss(guess)
        if abs(f) <= tol:
            return result(guess, iterations, (lo, hi))
        if f < 0:
            lo = guess
        else:
            hi = guess
    scale_step = 1
    while iterations < problem.max_iterations:
        iterations += 1
        if lo == 0.0:
            # the seed can be many orders of magnitude below the target:
            # probe hi * 2**-1, 2**-2, 2**-4, ... until the bracket has a floor
            mid = math.ldexp(hi, -scale_step)
            scale_step = min(2 * scale_step, 1024)
            if mid == 0.0:
                mid = math.ulp(0.0)
        elif hi > 4.0 * lo:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f = miss(mid)
        if abs(f) <= tol:
            return result(mid, iterations, (lo, hi))
        if f < 0:
            lo = mid
        else:
            hi = mid
    if caps is None and lo == 0.0 and hi == math.ulp(0.0):
        return _shoot_log(problem, roller, backward, iterations)
    raise ShootingError(
        f"no seed within tolerance after {iterations} iterations on window {problem.window}",
        (lo, hi),
    )


def _shoot_log(problem: ShootingProblem, roller: Roller, backward: bool, iterations: int) -> ShootingResult:
    """Bisection on ``log(alpha)`` below the smallest positive double."""
    B = float(problem.target)
    tol = problem.tolerance * B

    def miss(s):
        try:
            total = math.fsum(math.exp(t) for t in roller.log_roll(s, stop_above=B + tol))
        except OverflowError:
            return math.inf
        return total - B

    hi = math.log(math.ulp(0.0))
    lo = 2.0 * hi
    while iterations < problem.max_iterations:
        iterations += 1
        if miss(lo) < 0.0:
            break
        hi, lo = lo, 2.0 * lo
        if not math.isfinite(lo):
            break
    while iterations < problem.max_iterations:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f = miss(mid)
        if abs(f) <= tol:
            logs = roller.log_roll(mid)
            frag = np.exp(np.array(logs[::-1] if backward else logs))
            return ShootingResult(0.0, frag, iterations, (0.0, math.ulp(0.0)), log_alpha=mid)
        if f < 0:
            lo = mid
        else:
            hi = mid
    raise ShootingError(
        f"no seed within tolerance after {iterations} iterations on window {problem.window} "
        f"(log-seed bracket [{lo:g}, {hi:g}])",
        (0.0, math.ulp(0.0)),
    )
