import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pvarexec import (
    CurveState,
    ImpactParams,
    MarketProfile,
    RiskSpec,
    evaluate_cost,
    foc_residual,
    is_step,
    roll_is,
    roll_tc,
    tc_step,
    u_shape_profile,
)
from pvarexec.errors import NumericOverflowError
from pvarexec.recursion import is_step_brownian, tc_step_brownian


def test_tc_step_zero_risk_keeps_participation():
    prof = MarketProfile([100.0, 100.0], [0.3, 0.3])
    for p in (1.5, 2.0, 3.0):
        out = tc_step(CurveState(1, 10.0, 10.0), prof, ImpactParams(2.0, 0.5), RiskSpec(0.0, p))
        assert out == pytest.approx(10.0, rel=1e-15)


def test_tc_step_hand_value():
    # bracket = 1 * 0.1 + (2 * 0.5 / (1 * 2)) * 1 * 0.1 = 0.15, raised to 1/gamma = 1
    prof = MarketProfile(np.ones(2), np.ones(2))
    out = tc_step(CurveState(1, 0.1, 0.1), prof, ImpactParams(1.0, 1.0), RiskSpec(0.5, 2.0))
    bracket = 1.0 * 0.1 + (2 * 0.5 / (1.0 * 2.0)) * 1.0 * 0.1
    assert out == pytest.approx(0.15, abs=1e-15)
    assert out == bracket


def test_terminal_flag_drops_risk():
    prof = MarketProfile([50.0, 80.0], [0.02, 0.03])
    state = CurveState(1, 5.0, 5.0)
    imp, rk = ImpactParams(1.0, 0.7), RiskSpec(0.5, 2.3)
    assert tc_step(state, prof, imp, rk, terminal=True) == tc_step(state, prof, imp, RiskSpec(0.0, 2.3))
    state = CurveState(2, 5.0, 5.0)
    assert is_step(state, prof, imp, rk, initial=True) == is_step(state, prof, imp, RiskSpec(0.0, 2.3))


def test_is_step_mirrors_tc_with_constant_vol():
    prof = MarketProfile(np.ones(2), np.ones(2))
    out = is_step(CurveState(2, 0.1, 0.1), prof, ImpactParams(1.0, 1.0), RiskSpec(0.5, 2.0))
    assert out == pytest.approx(0.15, abs=1e-15)


def test_is_step_zero_risk():
    prof = MarketProfile([100.0, 100.0], [1.0, 1.0])
    out = is_step(CurveState(2, 10.0, 10.0), prof, ImpactParams(1.0, 2.0), RiskSpec(0.0, 2.0))
    assert out == pytest.approx(10.0, rel=1e-15)


def test_is_step_spot_volatility_factor():
    """With sigma = (1.0, 1.2) the IS step must zero the IS first-order condition."""
    prof = MarketProfile([1.0, 1.0], [1.0, 1.2])
    imp, rk = ImpactParams(1.0, 1.0), RiskSpec(0.5, 2.0)
    v2 = 0.1
    v1 = is_step(CurveState(2, v2, v2), prof, imp, rk)
    # by hand: v1 = (1.2 / 1.0) * 0.1 + (2*0.5/2) * (1.44 / 1.0) * 0.1
    assert v1 == pytest.approx(1.2 * 0.1 + 0.5 * 1.44 * 0.1, rel=1e-15)
    assert abs(foc_residual([v1, v2], prof, imp, rk, "is")[0]) < 1e-14

    # same fact from central differences of the cost along y_2 (moves mass v1 -> v2)
    def cost_at(shift):
        return evaluate_cost([v1 - shift, v2 + shift], prof, imp, rk, "is").total

    h = 1e-6
    assert abs((cost_at(h) - cost_at(-h)) / (2 * h)) < 1e-8

    # forward volatility (the TC factor) would leave a clear residual
    wrong = 1.2 * 0.1 + 0.5 * 1.0 * 0.1
    assert abs(foc_residual([wrong, v2], prof, imp, rk, "is")[0]) > 1e-2


states = st.tuples(
    st.floats(0.0, 1e3), st.floats(0.0, 1e4),
    st.floats(1.0, 1e4), st.floats(1.0, 1e4),
    st.floats(1e-3, 1.0), st.floats(1e-3, 1.0),
    st.floats(0.1, 3.0), st.floats(0.1, 5.0), st.floats(0.0, 1.0),
)


@settings(max_examples=300, deadline=None)
@given(states)
def test_p2_reduction_bitwise(s):
    v, extra, V1, V2, s1, s2, gamma, kappa, lam = s
    prof = MarketProfile([V1, V2], [s1, s2])
    imp = ImpactParams(kappa, gamma)
    a = tc_step(CurveState(1, v, v + extra), prof, imp, RiskSpec(lam, 2.0))
    b = tc_step_brownian(CurveState(1, v, v + extra), prof, imp, lam)
    assert a == b
    a = is_step(CurveState(2, v, v + extra), prof, imp, RiskSpec(lam, 2.0))
    b = is_step_brownian(CurveState(2, v, v + extra), prof, imp, lam)
    assert a == pytest.approx(b, rel=1e-15)


def test_overflow_reports_pillar():
    prof = MarketProfile([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(NumericOverflowError) as exc:
        roll_tc(1e200, 1, 3, prof, ImpactParams(1.0, 0.01), RiskSpec(1.0, 2.0))
    assert exc.value.pillar == 1


def test_roll_zero_seed_fixed_point(unit4, unit_params):
    imp, _ = unit_params
    np.testing.assert_array_equal(roll_tc(0.0, 1, 4, unit4, imp, RiskSpec(0.0)), np.zeros(4))
    np.testing.assert_array_equal(roll_tc(0.0, 1, 4, unit4, imp, RiskSpec(0.7)), np.zeros(4))


def test_roll_tc_unit_example(unit4, unit_params):
    imp, rk = unit_params
    frag = roll_tc(0.2, 1, 4, unit4, imp, rk)
    # gamma = 1 makes the recursion linear: v_{n+1} = v_n + 0.1 * x_n
    x, expected = 0.0, [0.2]
    for _ in range(3):
        x += expected[-1]
        expected.append(expected[-1] + 0.1 * x)
    np.testing.assert_allclose(frag, expected, rtol=1e-15)
    assert np.all(np.diff(frag) > 0)


def test_roll_tc_u_shape_increasing_constant_vol():
    prof = u_shape_profile(102)
    prof = MarketProfile(prof.volumes, np.full(102, 0.02))
    frag = roll_tc(0.5, 1, 102, prof, ImpactParams(1.0, 0.5), RiskSpec(1e-3, 2.0))
    part = frag / prof.volumes
    assert np.all(np.diff(part) >= 0)
    # with constant sigma the participation rate, not the slice, is monotone;
    # on a U-shaped day slices follow volume.  Flat volume makes slices monotone too.
    flat = MarketProfile(np.full(102, 150.0), np.full(102, 0.02))
    frag = roll_tc(0.5, 1, 102, flat, ImpactParams(1.0, 0.5), RiskSpec(1e-3, 2.0))
    assert np.all(np.diff(frag) >= 0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(10.0, 500.0), min_size=2, max_size=25),
    st.floats(1e-4, 0.5), st.floats(0.3, 2.5), st.floats(1.2, 3.5), st.floats(1e-5, 1e-2),
    st.floats(0.01, 5.0),
)
def test_mirror_constant_vol(vols, sigma, gamma, p, lam, seed):
    prof = MarketProfile(vols, np.full(len(vols), sigma))
    imp, rk = ImpactParams(1.0, gamma), RiskSpec(lam, p)
    n = len(vols)
    try:
        tc = roll_tc(seed, 1, n, prof, imp, rk)
    except NumericOverflowError:
        assume(False)
    is_ = roll_is(seed, 1, n, prof.reversed(), imp, rk)
    np.testing.assert_allclose(is_, tc[::-1], rtol=1e-12)


def test_roll_is_nonconstant_vol_satisfies_foc():
    prof = u_shape_profile(30, vol_scale=0.02)
    imp, rk = ImpactParams(1.0, 0.6), RiskSpec(1e-3, 2.4)
    frag = roll_is(3.0, 1, 30, prof, imp, rk)
    tc_rev = roll_tc(3.0, 1, 30, prof.reversed(), imp, rk)[::-1]
    assert not np.allclose(frag, tc_rev, rtol=1e-6)
    assert np.max(np.abs(foc_residual(frag, prof, imp, rk, "is", normalize=True))) < 1e-10


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(10.0, 500.0), min_size=2, max_size=20),
    st.floats(0.3, 2.5),
    st.floats(0.01, 10.0),
)
def test_zero_risk_constant_participation(vols, gamma, seed):
    prof = MarketProfile(vols, np.full(len(vols), 0.02))
    frag = roll_tc(seed, 1, len(vols), prof, ImpactParams(1.0, gamma), RiskSpec(0.0, 2.0))
    part = frag / np.asarray(vols)
    np.testing.assert_allclose(part, part[0], rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.floats(10.0, 500.0), st.floats(0.005, 0.05)), min_size=2, max_size=20),
    st.floats(0.3, 2.5), st.floats(1.2, 3.5), st.floats(0.0, 1e-2),
    st.floats(0.01, 10.0), st.floats(1.0, 2.0),
)
def test_monotone_in_seed(rows, gamma, p, lam, seed, factor):
    prof = MarketProfile([r[0] for r in rows], [r[1] for r in rows])
    imp, rk = ImpactParams(1.0, gamma), RiskSpec(lam, p)
    low = roll_tc(seed, 1, len(rows), prof, imp, rk)
    high = roll_tc(seed * factor, 1, len(rows), prof, imp, rk)
    assert np.all(high >= low)


def test_curve_state_validation():
    with pytest.raises(ValueError):
        CurveState(1, -1.0, 0.0)
    with pytest.raises(ValueError):
        CurveState(1, 2.0, 1.0)
