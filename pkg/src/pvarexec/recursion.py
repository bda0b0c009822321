"""Explicit recursive steps of the optimal TC and IS trading curves.

The TC curve runs forward in time: given the trade at pillar ``n`` and the
quantity already executed, the first-order condition of the cost functional
fixes the trade at ``n + 1``.  The IS curve is the same construction with time
running backwards, seeded at the stop pillar.

All pillar indices are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericOverflowError
from .model import ImpactParams, MarketProfile, RiskSpec


@dataclass(frozen=True)
class CurveState:
    """Trade at pillar ``index`` and the running sum the next step needs.

    For TC ``accumulated`` is the sum of trades up to and including
    ``index``; for IS it is the sum from ``index`` to the stop pillar.
    """

    index: int
    trade: float
    accumulated: float

    def __post_init__(self):
        if self.trade < 0:
            raise ValueError(f"trade must be >= 0, got {self.trade}")
        # allow a few ulps of slack from summation order
        if self.accumulated < self.trade * (1 - 1e-12):
            raise ValueError("accumulated quantity must be >= current trade")


def _risk_coef(impact: ImpactParams, risk: RiskSpec, lam: float) -> float:
    return risk.p * lam / (impact.kappa * (impact.gamma + 1.0))


def _advance(v, V, V_next, ratio, riskvol, acc, gamma, coef, pm1, inv_gamma, pillar):
    try:
        bracket = ratio * (v / V) ** gamma + coef * riskvol * acc ** pm1
        out = V_next * bracket ** inv_gamma
    except (OverflowError, ZeroDivisionError):
        raise NumericOverflowError(f"non-finite trade after pillar {pillar}", pillar) from None
    if not math.isfinite(out):
        raise NumericOverflowError(f"non-finite trade after pillar {pillar}", pillar)
    return out


def _check_index(n: int, lo: int, hi: int, what: str):
    if not lo <= n <= hi:
        raise IndexError(f"{what} pillar {n} outside [{lo}, {hi}]")


def tc_step(
    state: CurveState,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    terminal: bool = False,
) -> float:
    """Trade at pillar ``state.index + 1`` on the optimal TC curve.

    ``terminal`` switches the risk weight off, as at the last optimised pillar.
    """
    n = state.index
    _check_index(n + 1, 2, profile.n_pillars, "next")
    V, s = profile.volumes, profile.volatilities
    lam = 0.0 if terminal else risk.lam
    s_n, s_next = float(s[n - 1]), float(s[n])
    pm1 = risk.p - 1.0
    return _advance(
        state.trade, float(V[n - 1]), float(V[n]),
        s_n / s_next, s_next ** pm1, state.accumulated,
        impact.gamma, _risk_coef(impact, risk, lam), pm1, 1.0 / impact.gamma, n,
    )


def tc_step_brownian(
    state: CurveState,
    profile: MarketProfile,
    impact: ImpactParams,
    lam: float,
    terminal: bool = False,
) -> float:
    """Variance-risk (p = 2) TC step written out with the forward volatility."""
    n = state.index
    _check_index(n + 1, 2, profile.n_pillars, "next")
    V, s = profile.volumes, profile.volatilities
    lam = 0.0 if terminal else lam
    g = impact.gamma
    s_n, s_next = float(s[n - 1]), float(s[n])
    bracket = (s_n / s_next) * (state.trade / float(V[n - 1])) ** g + (
        2.0 * lam / (impact.kappa * (g + 1.0))
    ) * s_next * state.accumulated
    return float(V[n]) * bracket ** (1.0 / g)


def is_step(
    state: CurveState,
    profile: MarketProfile,
    impact: ImpactParams,
    risk: RiskSpec,
    initial: bool = False,
) -> float:
    """Trade at pillar ``state.index - 1`` on the optimal IS curve.

    ``initial`` switches the risk weight off, as at the fixed first pillar.
    The risk term is weighted by the spot volatility ``sigma_n ** p / sigma_{n-1}``.
    """
    n = state.index
    _check_index(n - 1, 1, profile.n_pillars - 1, "previous")
    V, s = profile.volumes, profile.volatilities
    lam = 0.0 if initial else risk.lam
    s_n, s_prev = float(s[n - 1]), float(s[n - 2])
    pm1 = risk.p - 1.0
    return _advance(
        state.trade, float(V[n - 1]), float(V[n - 2]),
        s_n / s_prev, s_n ** risk.p / s_prev, state.accumulated,
        impact.gamma, _risk_coef(impact, risk, lam), pm1, 1.0 / impact.gamma, n,
    )


def is_step_brownian(
    state: CurveState,
    profile: MarketProfile,
    impact: ImpactParams,
    lam: float,
    initial: bool = False,
) -> float:
    n = state.index
    _check_index(n - 1, 1, profile.n_pillars - 1, "previous")
    V, s = profile.volumes, profile.volatilities
    lam = 0.0 if initial else lam
    g = impact.gamma
    s_n, s_prev = float(s[n - 1]), float(s[n - 2])
    bracket = (s_n / s_prev) * (state.trade / float(V[n - 1])) ** g + (
        2.0 * lam / (impact.kappa * (g + 1.0))
    ) * (s_n ** 2 / s_prev) * state.accumulated
    return float(V[n - 2]) * bracket ** (1.0 / g)


class Roller:
    """Pre-computed coefficients for rolling one window in its time order.

    TC windows roll forward from their first pillar; IS windows roll backward
    from their last.  ``roll`` returns trades in roll order, optionally
    stopping as soon as the running total exceeds ``stop_above`` (used by the
    shooting bisection, where only the sign of the miss matters).
    """

    __slots__ = ("V", "ratio", "riskvol", "gamma", "coef", "pm1", "inv_gamma", "pillars")

    def __init__(self, profile, impact, risk, start, end, backward=False):
        _check_index(start, 1, profile.n_pillars, "start")
        _check_index(end, start, profile.n_pillars, "end")
        V = [float(x) for x in profile.volumes[start - 1:end]]
        s = [float(x) for x in profile.volatilities[start - 1:end]]
        pillars = list(range(start, end + 1))
        pm1 = risk.p - 1.0
        if backward:
            V.reverse()
            s.reverse()
            pillars.reverse()
            riskvol = [s[k] ** risk.p / s[k + 1] for k in range(len(s) - 1)]
        else:
            riskvol = [s[k + 1] ** pm1 for k in range(len(s) - 1)]
        self.V = V
        self.ratio = [s[k] / s[k + 1] for k in range(len(s) - 1)]
        self.riskvol = riskvol
        self.gamma = impact.gamma
        self.coef = _risk_coef(impact, risk, risk.lam)
        self.pm1 = pm1
        self.inv_gamma = 1.0 / impact.gamma
        self.pillars = pillars

    def __len__(self):
        return len(self.V)

    def roll(self, seed: float, stop_above: float | None = None) -> list[float]:
        V, ratio, riskvol, pillars = self.V, self.ratio, self.riskvol, self.pillars
        g, c, pm1, ig = self.gamma, self.coef, self.pm1, self.inv_gamma
        v = float(seed)
        acc = v
        out = [v]
        for k in range(len(V) - 1):
            if stop_above is not None and acc > stop_above:
                break
            v = _advance(v, V[k], V[k + 1], ratio[k], riskvol[k], acc, g, c, pm1, ig, pillars[k])
            acc += v
            out.append(v)
        return out

    def roll_clamped(self, seed: float, caps, stop_above: float | None = None) -> tuple[list[float], list[bool]]:
        """Roll with every slice capped: ``min(trade, cap)`` in roll order.

        The uncapped trade drives the next step while the running total
        counts what is actually executed, so pairs of uncapped neighbours keep
        their first-order condition.  A trade that overflows saturates every
        later pillar.  Returns the capped trades and which of them hit the cap.
        """
        V, ratio, riskvol, pillars = self.V, self.ratio, self.riskvol, self.pillars
        g, c, pm1, ig = self.gamma, self.coef, self.pm1, self.inv_gamma
        v = float(seed)
        out = [min(v, caps[0])]
        hit = [v >= caps[0]]
        acc = out[0]
        for k in range(len(V) - 1):
            if stop_above is not None and acc > stop_above:
                break
            if math.isfinite(v):
                try:
                    v = _advance(v, V[k], V[k + 1], ratio[k], riskvol[k], acc, g, c, pm1, ig, pillars[k])
                except NumericOverflowError:
                    v = math.inf
            out.append(min(v, caps[k + 1]))
            hit.append(v >= caps[k + 1])
            acc += out[-1]
        return out, hit

    def log_roll(self, log_seed: float, stop_above: float | None = None) -> list[float]:
        """``roll`` carried out on log trades, for seeds below the float range.

        Below-quadratic exponents map a seed ``a`` to roughly ``a**((p-1)/gamma)``
        at the next pillar, so a curve of ordinary size can need a seed such as
        ``exp(-1e6)``.  Returns log trades in roll order.
        """
        V, ratio, riskvol = self.V, self.ratio, self.riskvol
        g, c, pm1, ig = self.gamma, self.coef, self.pm1, self.inv_gamma
        log_stop = math.log(stop_above) if stop_above is not None else math.inf
        lv = float(log_seed)
        lacc = lv
        out = [lv]
        for k in range(len(V) - 1):
            if lacc > log_stop:
                break
            a = math.log(ratio[k]) + g * (lv - math.log(V[k]))
            if c > 0.0:
                a = _logaddexp(a, math.log(c * riskvol[k]) + pm1 * lacc)
            lv = math.log(V[k + 1]) + ig * a
            lacc = _logaddexp(lacc, lv)
            out.append(lv)
        return out


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def roll_tc(seed_alpha, start, end, profile, impact, risk) -> np.ndarray:
    """TC fragment for pillars ``start..end`` seeded with ``v_start = seed_alpha``."""
    if seed_alpha < 0:
        raise ValueError(f"seed must be >= 0, got {seed_alpha}")
    return np.array(Roller(profile, impact, risk, start, end).roll(seed_alpha))


def roll_is(seed, start, stop, profile, impact, risk) -> np.ndarray:
    """IS fragment for pillars ``start..stop`` seeded with ``v_stop = seed``.

    Returned in ascending pillar order.
    """
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    trades = Roller(profile, impact, risk, start, stop, backward=True).roll(seed)
    return np.array(trades[::-1])
