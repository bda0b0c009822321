"""p-variation risk, cost evaluation, first-order residuals and a brute-force oracle.

Trade fragments are aligned to the profile through ``start``, the pillar of
their first element.  With ``x_n`` the cumulative and ``y_n`` the remaining
quantity, the functionals are

* TC: ``sum kappa s_n v_n^(g+1) / V_n^g + lam * sum_{n<last} x_n^p s_{n+1}^p``
* IS: ``sum kappa s_n v_n^(g+1) / V_n^g + lam * sum_{n>first} y_n^p s_n^p``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Benchmark, ImpactParams, MarketProfile, RiskSpec

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CostBreakdown:
    impact_cost: float
    risk_cost: float

    @property
    def total(self) -> float:
        return self.impact_cost + self.risk_cost


def p_variation(values, p: float) -> float:
    """Sum of ``|y_n| ** p``."""
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    y = np.abs(np.asarray(values, dtype=float))
    return float(np.sum(y ** p))


def _aligned(trades, profile: MarketProfile, start: int):
    v = np.asarray(trades, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("trade fragment must be a non-empty vector")
    end = start + v.size - 1
    if start < 1 or end > profile.n_pillars:
        raise ValueError(
            f"fragment of length {v.size} at pillar {start} does not fit "
            f"a profile of {profile.n_pillars} pillars"
        )
    V = profile.volumes[start - 1:end]
    s = profile.volatilities[start - 1:end]
    return v, V, s


def _risk_terms(v, s, p, benchmark):
    """Exposure vector whose p-variation is the risk of the fragment."""
    if benchmark is Benchmark.TC:
        return np.cumsum(v)[:-1] * s[1:]
    return np.cumsum(v[::-1])[::-1][1:] * s[1:]


def evaluate_cost(
    trades,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    benchmark=Benchmark.TC,
    start: int = 1,
) -> CostBreakdown:
    benchmark = Benchmark.parse(benchmark)
    v, V, s = _aligned(trades, profile, start)
    g = impact.gamma
    impact_cost = float(np.sum(impact.kappa * s * v ** (g + 1.0) / V ** g))
    risk_cost = risk.lam * p_variation(_risk_terms(v, s, risk.p, benchmark), risk.p) if v.size > 1 else 0.0
    return CostBreakdown(impact_cost, float(risk_cost))


def foc_residual(
    trades,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    benchmark=Benchmark.TC,
    start: int = 1,
    normalize: bool = False,
) -> np.ndarray:
    """Partial derivatives of the functional at each free cumulative coordinate.

    A fragment of length ``m`` has ``m - 1`` free coordinates (the total is
    fixed).  With ``normalize`` each entry is divided by
    ``kappa * (gamma + 1) * sigma`` at the pillar whose marginal impact
    leads the expression.
    """
    benchmark = Benchmark.parse(benchmark)
    v, V, s = _aligned(trades, profile, start)
    g, k, p, lam = impact.gamma, impact.kappa, risk.p, risk.lam
    if g < 1 and v.size > 2 and np.any(v[1:-1] == 0):
        n = start + 1 + int(np.flatnonzero(v[1:-1] == 0)[0])
        raise ValueError(f"derivative undefined at zero trade on interior pillar {n}")
    marginal = k * s * (g + 1.0) * (v / V) ** g
    if benchmark is Benchmark.TC:
        x = np.cumsum(v)[:-1]
        res = marginal[:-1] - marginal[1:] + p * lam * s[1:] ** p * x ** (p - 1.0)
        scale = k * (g + 1.0) * s[:-1]
    else:
        y = np.cumsum(v[::-1])[::-1][1:]
        res = marginal[1:] - marginal[:-1] + p * lam * s[1:] ** p * y ** (p - 1.0)
        scale = k * (g + 1.0) * s[1:]
    return res / scale if normalize else res


def _golden_min(f, lo: float, hi: float, iters: int = 80) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    best = min(((f(lo), lo), (fc, c), (fd, d), (f(hi), hi)))
    return best[1]


def brute_force_optimum(
    total: float,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    benchmark=Benchmark.TC,
    *,
    n_random: int = 10,
    seed: int = 0,
    tol: float = 1e-12,
    max_sweeps: int = 20000,
) -> np.ndarray:
    """Minimise the cost over ``{v >= 0, sum v = total}`` by coordinate descent.

    The simplex is parameterised by the cut points ``c_k = v_1 + ... + v_k``;
    moving one cut shifts mass between two neighbouring pillars and the
    ordering ``c_{k-1} <= c_k <= c_{k+1}`` keeps every trade nonnegative.
    Each cut is set by a derivative-free golden-section line search.  Runs
    from the uniform split and ``n_random`` Dirichlet draws; returns the
    lowest-cost result (ties to the lexicographically smallest vector).
    """
    benchmark = Benchmark.parse(benchmark)
    N = profile.n_pillars
    if N > 6:
        raise ValueError(f"brute-force oracle is limited to 6 pillars, got {N}")
    if not total > 0:
        raise ValueError(f"total must be > 0, got {total}")

    V = [float(x) for x in profile.volumes]
    s = [float(x) for x in profile.volatilities]
    g, kap, p, lam = impact.gamma, impact.kappa, risk.p, risk.lam
    tc = benchmark is Benchmark.TC
    imp = [kap * s[n] / V[n] ** g for n in range(N)]
    # risk weight of the cut between pillar k and k+1 (0-based k)
    rw = [lam * s[k + 1] ** p for k in range(N - 1)]

    def local(k, x, left, right):
        exposure = x if tc else total - x
        return (
            imp[k] * (x - left) ** (g + 1.0)
            + imp[k + 1] * (right - x) ** (g + 1.0)
            + rw[k] * exposure ** p
        )

    def cost(cuts):
        v = np.diff(np.concatenate(([0.0], cuts, [total])))
        return evaluate_cost(np.maximum(v, 0.0), profile, impact, risk, benchmark).total

    rng = np.random.default_rng(seed)
    starts = [np.full(N, total / N)]
    starts += [rng.dirichlet(np.ones(N)) * total for _ in range(n_random)]

    results = []
    for v0 in starts:
        cuts = list(np.cumsum(v0)[:-1])
        j_prev = cost(cuts)
        for _ in range(max_sweeps):
            for k in range(N - 1):
                left = cuts[k - 1] if k > 0 else 0.0
                right = cuts[k + 1] if k < N - 2 else total
                cuts[k] = _golden_min(lambda x: local(k, x, left, right), left, right)
            j = cost(cuts)
            if abs(j_prev - j) < tol:
                break
            j_prev = j
        v = np.maximum(np.diff(np.concatenate(([0.0], cuts, [total]))), 0.0)
        results.append((cost(cuts), tuple(v)))
    results.sort()
    return np.array(results[0][1])
