"""Command-line front end.

Commands write CSV artifacts into ``--out`` (default ``$PVAREXEC_OUT`` or the
current directory).  Exit codes: 0 success, 1 solver failure, 2 bad input.
Failures print a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import implied_p, sweep_p
from .constraints import TraceRow, solve
from .errors import ExecutionError, InputError
from .model import ExecutionOrder, ImpactParams, RiskSpec, load_profile, u_shape_profile, write_profile
from .risk import brute_force_optimum, evaluate_cost
from .shooting import ShootingProblem, shoot

OUT_ENV = "PVAREXEC_OUT"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(c) for c in row])


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bundled_profile_path():
    return resources.files("pvarexec") / "data" / "u_shape_102.csv"


def _profile(path, auction_volume):
    if path is None:
        with resources.as_file(_bundled_profile_path()) as p:
            return load_profile(p, auction_volume=auction_volume)
    if not Path(path).is_file():
        raise FileNotFoundError(path)
    return load_profile(path, auction_volume=auction_volume)


def _risk(args) -> RiskSpec:
    if args.hurst is not None:
        return RiskSpec.from_hurst(args.lam, args.hurst)
    return RiskSpec(args.lam, args.p)


def _order(args, total=None) -> ExecutionOrder:
    return ExecutionOrder(
        total_quantity=args.qty if total is None else total,
        benchmark=args.benchmark,
        pvol_cap=args.pvol,
        min_slice=args.min_slice,
        auction_participation=args.auction_part,
    )


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_trace(path: Path, trace) -> None:
    _write_csv(path, TraceRow.FIELDS, (r.as_row() for r in trace))


def cmd_solve(args) -> int:
    profile = _profile(args.profile, args.auction_volume)
    impact = ImpactParams(args.kappa, args.gamma)
    sched = solve(_order(args), profile, impact, _risk(args))
    out = _out_dir(args)
    q = args.pvol
    caps = q * profile.volumes if q is not None else np.full(profile.n_pillars, np.inf)
    cum = sched.cumulative
    _write_csv(
        out / "schedule.csv",
        ("pillar", "trade", "cumulative", "cap", "saturated"),
        (
            (n + 1, sched.trades[n], cum[n], caps[n], sched.saturated[n])
            for n in range(profile.n_pillars)
        ),
    )
    _write_trace(Path(args.trace) if args.trace else out / "trace.csv", sched.trace)
    summary = {
        "benchmark": sched.benchmark.value,
        "start_pillar": sched.start_pillar,
        "stop_pillar": sched.stop_pillar,
        "switch_pillar": sched.switch_pillar,
        "segment": list(sched.segment) if sched.segment else None,
        "auction_trade": sched.auction_trade,
        "alpha": sched.alpha,
        "executed": sched.executed,
        "residual": sched.residual,
        "cost": evaluate_cost(sched.trades, profile, impact, _risk(args), sched.benchmark).total,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_sweep(args) -> int:
    profile = _profile(args.profile, args.auction_volume)
    rows = sweep_p(_order(args), profile, ImpactParams(args.kappa, args.gamma), args.lam, args.p_grid)
    _write_csv(
        _out_dir(args) / "sweep.csv",
        ("p", "H", "start", "switch", "slope", "end", "error"),
        ((r.p, r.hurst, r.start_pillar, r.switch_pillar, r.terminal_slope, r.end_pillar, r.error) for r in rows),
    )
    return 0


def cmd_implied_p(args) -> int:
    paths = args.profile or [None]
    rows = []
    for path in paths:
        profile = _profile(path, args.auction_volume)
        total = args.qty if args.qty is not None else args.volume_fraction * float(profile.volumes.sum())
        name = Path(path).stem if path else "synthetic"
        res = implied_p(
            _order(args, total), profile, ImpactParams(args.kappa, args.gamma), args.lam,
            args.target_pillar, tuple(args.p_bounds), args.tol, instrument=name,
        )
        rows.append((res.instrument, res.target_pillar, res.implied_p))
    _write_csv(_out_dir(args) / "implied_p.csv", ("instrument", "n_sharp", "implied_p"), rows)
    return 0


def cmd_oracle_check(args) -> int:
    profile = _profile(args.profile, 0.0)
    if profile.n_pillars > 6:
        raise InputError(f"oracle check needs at most 6 pillars, profile has {profile.n_pillars}")
    impact, risk = ImpactParams(args.kappa, args.gamma), _risk(args)
    n = profile.n_pillars
    res = shoot(ShootingProblem(args.qty, (1, n)), profile, impact, risk, args.benchmark)
    brute = brute_force_optimum(args.qty, profile, impact, risk, args.benchmark, seed=args.seed)
    diff = np.abs(res.fragment - brute)
    j_rec = evaluate_cost(res.fragment, profile, impact, risk, args.benchmark).total
    j_bf = evaluate_cost(brute, profile, impact, risk, args.benchmark).total
    _write_csv(
        _out_dir(args) / "oracle.csv",
        ("pillar", "recursion", "oracle", "abs_diff"),
        ((k + 1, res.fragment[k], brute[k], diff[k]) for k in range(n)),
    )
    ok = diff.max() <= args.coord_tol and abs(j_rec - j_bf) <= args.cost_tol
    print(json.dumps({"max_abs_diff": float(diff.max()), "cost_gap": j_rec - j_bf, "ok": bool(ok)}))
    return 0 if ok else 1


def cmd_synth(args) -> int:
    profile = u_shape_profile(args.pillars, volume_scale=args.volume_scale, vol_scale=args.vol_scale)
    out = Path(args.path)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_profile(profile, out)
    return 0


def _common(p: argparse.ArgumentParser, profile_nargs=None) -> None:
    if profile_nargs:
        p.add_argument("--profile", nargs=profile_nargs, help="pillar,volume,volatility CSV files")
    else:
        p.add_argument("--profile", help="pillar,volume,volatility CSV (default: bundled U-shape)")
    p.add_argument("--auction-volume", type=float, default=0.0)
    p.add_argument("--benchmark", choices=("tc", "is"), default="tc")
    p.add_argument("--pvol", type=float, default=None, help="participation cap q in (0, 1]")
    p.add_argument("--min-slice", type=float, default=0.0)
    p.add_argument("--auction-part", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvarexec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal schedule for one order")
    _common(p)
    p.add_argument("--qty", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--p", type=float, default=2.0)
    g.add_argument("--hurst", type=float, default=None)
    p.add_argument("--trace", help="solver trace CSV path (default OUT/trace.csv)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="start/switch pillars over a grid of exponents")
    _common(p)
    p.add_argument("--qty", type=float, required=True)
    p.add_argument("--p-grid", type=_float_list, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("implied-p", help="exponent matching a target start pillar")
    _common(p, profile_nargs="+")
    p.add_argument("--qty", type=float, default=None)
    p.add_argument("--volume-fraction", type=float, default=0.06,
                   help="order size as a fraction of daily volume when --qty is absent")
    p.add_argument("--target-pillar", type=int, required=True)
    p.add_argument("--p-bounds", type=_float_list, default=[1.2, 4.0])
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_implied_p)

    p = sub.add_parser("oracle-check", help="compare recursion with brute force (<= 6 pillars)")
    _common(p)
    p.add_argument("--qty", type=float, default=1.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--p", type=float, default=2.0)
    g.add_argument("--hurst", type=float, default=None)
    p.add_argument("--coord-tol", type=float, default=1e-4)
    p.add_argument("--cost-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("synth", help="write the synthetic U-shaped profile")
    p.add_argument("path")
    p.add_argument("--pillars", type=int, default=102)
    p.add_argument("--volume-scale", type=float, default=100.0)
    p.add_argument("--vol-scale", type=float, default=0.02)
    p.set_defaults(func=cmd_synth)
    return parser


def _raising_module(exc: BaseException) -> str:
    """Innermost package module on the traceback, ``cli`` if none."""
    module = "cli"
    tb = exc.__traceback__
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("pvarexec.") and name != "pvarexec.errors":
            module = name.rsplit(".", 1)[-1]
        tb = tb.tb_next
    return module


def _fail(code: int, exc: BaseException, args) -> int:
    if isinstance(exc, ExecutionError):
        payload = exc.to_dict()
    else:
        payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, FileNotFoundError):
        payload["path"] = str(exc.filename if exc.filename is not None else exc.args[0])
    payload["module"] = _raising_module(exc)
    payload["operation"] = getattr(args, "command", None)
    params = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        if isinstance(v, (int, float, str, bool, list, type(None))):
            params[k] = v
    payload["params"] = params
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, ValueError) as exc:
        return _fail(2, exc, args)
    except ExecutionError as exc:
        return _fail(1, exc, args)


if __name__ == "__main__":
    sys.exit(main())
