import math

import numpy as np
import pytest
from conftest import U_IMPACT, U_LAMBDA

from pvarexec import (
    ExecutionOrder,
    RiskSpec,
    implied_p,
    implied_p_regression,
    mean_impact,
    mean_volatility,
    solve_tc,
    sweep_p,
    terminal_slope,
)
from pvarexec.analytics import start_pillar
from pvarexec.errors import SingularDesignError, UnattainablePillarError


def test_singleton_grid_matches_solve(u_profile, u_order):
    (row,) = sweep_p(u_order, u_profile, U_IMPACT, U_LAMBDA, [2.0])
    sched = solve_tc(u_order, u_profile, U_IMPACT, RiskSpec(U_LAMBDA, 2.0))
    assert row.start_pillar == sched.start_pillar
    assert row.switch_pillar == sched.switch_pillar
    assert row.terminal_slope == terminal_slope(sched)
    assert row.hurst * row.p == 1.0
    assert row.error is None


def test_capped_sweep_ordering(u_profile, u_order_uncapped):
    order = ExecutionOrder(
        u_order_uncapped.total_quantity, pvol_cap=0.2, min_slice=u_order_uncapped.min_slice
    )
    rows = sweep_p(order, u_profile, U_IMPACT, U_LAMBDA, [1.8, 2.0, 2.2])
    starts = [r.start_pillar for r in rows]
    switches = [r.switch_pillar for r in rows]
    assert starts == sorted(starts) and starts[0] < starts[-1]
    assert switches == sorted(switches, reverse=True) and switches[0] > switches[-1]
    for r in rows:
        assert r.start_pillar <= r.switch_pillar


def test_slope_strictly_increasing(u_profile, u_order_uncapped):
    rows = sweep_p(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, [1.5, 2.0, 2.5, 3.0])
    slopes = [r.terminal_slope for r in rows]
    assert all(b > a for a, b in zip(slopes, slopes[1:]))


def test_sweep_parallel_matches_serial(u_profile, u_order):
    grid = [1.6, 2.0, 2.4]
    serial = sweep_p(u_order, u_profile, U_IMPACT, U_LAMBDA, grid)
    parallel = sweep_p(u_order, u_profile, U_IMPACT, U_LAMBDA, grid, workers=2)
    assert serial == parallel


def test_sweep_records_errors(u_profile):
    order = ExecutionOrder(1000.0, pvol_cap=0.2, min_slice=500.0)
    rows = sweep_p(order, u_profile, U_IMPACT, U_LAMBDA, [2.0, 2.5])
    assert all(r.error and r.error.startswith("MinSliceUnattainableError") for r in rows)
    assert all(math.isnan(r.terminal_slope) for r in rows)


@pytest.mark.parametrize("grid", [[2.0, 1.8], [1.0, 2.0], [2.0, 2.0]])
def test_sweep_grid_validation(u_profile, u_order, grid):
    with pytest.raises(ValueError):
        sweep_p(u_order, u_profile, U_IMPACT, U_LAMBDA, grid)


def test_implied_p_tight_bounds(u_profile, u_order_uncapped):
    target = start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, 2.0)
    res = implied_p(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, target, (1.95, 2.05))
    assert res.implied_p >= 2.0
    assert res.achieved_pillar == target
    assert start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, res.implied_p) == target


@pytest.mark.parametrize("p_star", [1.7, 2.3])
def test_implied_p_round_trip(u_profile, u_order_uncapped, p_star):
    target = start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, p_star)
    res = implied_p(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, target, tol=1e-3)
    assert res.implied_p >= p_star - 1e-3
    assert start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, res.implied_p) == target
    # one step past the returned exponent the start pillar has moved on
    assert start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, res.implied_p + 2e-3) > target


def test_implied_p_unattainable(u_profile, u_order_uncapped):
    assert start_pillar(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, 1.2) > 1
    with pytest.raises(UnattainablePillarError) as exc:
        implied_p(u_order_uncapped, u_profile, U_IMPACT, U_LAMBDA, 1, (1.2, 4.0))
    lo, hi = exc.value.attainable
    assert 1 < lo <= hi <= 102


def test_regression_exact_plane():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0, 1, 10), rng.uniform(0, 1, 10)
    rows = list(zip(2 + 0.5 * x - 1.0 * y, x, y))
    fit = implied_p_regression(rows)
    assert fit.intercept == pytest.approx(2.0, abs=1e-12)
    assert fit.coef_impact == pytest.approx(0.5, abs=1e-12)
    assert fit.coef_vol == pytest.approx(-1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_regression_singular():
    x = np.linspace(0, 1, 8)
    with pytest.raises(SingularDesignError):
        implied_p_regression(list(zip(1 + x, x, x)))
    with pytest.raises(ValueError):
        implied_p_regression([(1, 2, 3), (2, 3, 4)])


def test_regression_noisy_panel():
    rng = np.random.default_rng(12345)
    x, y = rng.uniform(0, 1, 30), rng.uniform(0, 1, 30)
    p = 2 + 0.5 * x - 1.0 * y + rng.normal(0, 0.05, 30)
    fit = implied_p_regression(zip(p, x, y))
    for est, truth, se in zip((fit.intercept, fit.coef_impact, fit.coef_vol), (2.0, 0.5, -1.0), fit.stderr):
        assert abs(est - truth) <= 3 * se
    assert 0.0 <= fit.r_squared <= 1.0


def test_regressors_on_schedule(u_profile, u_order):
    sched = solve_tc(u_order, u_profile, U_IMPACT, RiskSpec(U_LAMBDA, 2.0))
    h = mean_impact(sched, u_profile, U_IMPACT)
    v = sched.trades
    per_pillar = u_profile.volatilities * (v / u_profile.volumes) ** 0.5
    assert h == pytest.approx(np.sum(v * per_pillar) / np.sum(v), rel=1e-12)
    assert min(per_pillar[v > 0]) <= h <= max(per_pillar)
    assert mean_volatility(u_profile, 2.0) == pytest.approx(2 * np.mean(u_profile.volatilities))

