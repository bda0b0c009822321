import numpy as np
import pytest

from pvarexec import ExecutionOrder, ImpactParams, MarketProfile, RiskSpec, u_shape_profile

ACCEPTANCE_RESULTS = []


def record(number, name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name} {detail}")


# Reference synthetic day: 102 pillars, U-shaped curves, 6% of daily volume.
U_VOL_SCALE = 0.02
U_IMPACT = ImpactParams(kappa=1.0, gamma=0.5)
U_LAMBDA = 1e-3


@pytest.fixture(scope="session")
def u_profile():
    return u_shape_profile(102, vol_scale=U_VOL_SCALE)


@pytest.fixture(scope="session")
def u_order(u_profile):
    v_star = 0.06 * float(u_profile.volumes.sum())
    return ExecutionOrder(v_star, "tc", pvol_cap=0.2, min_slice=0.005 * v_star / 102)


@pytest.fixture(scope="session")
def u_order_uncapped(u_profile):
    """Aggressiveness setting: no cap, start pillar driven by the minimum slice."""
    v_star = 0.06 * float(u_profile.volumes.sum())
    return ExecutionOrder(v_star, "tc", pvol_cap=None, min_slice=0.5 * v_star / 102)


@pytest.fixture
def unit4():
    return MarketProfile(np.ones(4), np.ones(4))


@pytest.fixture
def unit_params():
    return ImpactParams(1.0, 1.0), RiskSpec(0.1, 2.0)
