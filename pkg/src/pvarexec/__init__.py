"""Optimal Target Close and Implementation Shortfall schedules with p-variation risk."""

__version__ = "0.1.0"

from .analytics import (
    ImpliedPResult,
    RegressionResult,
    SweepRow,
    implied_p,
    implied_p_regression,
    mean_impact,
    mean_volatility,
    sweep_p,
    terminal_slope,
)
from .constraints import ConstraintConfig, TraceRow, solve, solve_is, solve_tc
from .model import (
    Benchmark,
    ExecutionOrder,
    ImpactParams,
    MarketProfile,
    RiskSpec,
    Schedule,
    ValidatedOrder,
    load_profile,
    u_shape_profile,
    validate_order,
    write_profile,
)
from .recursion import CurveState, is_step, roll_is, roll_tc, tc_step
from .risk import CostBreakdown, brute_force_optimum, evaluate_cost, foc_residual, p_variation
from .shooting import ShootingProblem, ShootingResult, shoot
