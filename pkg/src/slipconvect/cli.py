"""Command-line entry point.

Subcommands: run <config>, sweep <plan>, certify <run-dir>, check [config].
Exit codes: 0 success, 1 solver failure, 2 configuration error, 3 check-suite
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .boundcert import (
    CalibrationDatum,
    calibrate_constants,
    certify,
    certify_infinite_pr,
    choose_parameters,
    choose_parameters_infinite_pr,
    dc_bound_check,
)
from .checks import run_checks
from .config import ConfigError, load_config
from .diagnostics import _json_sanitize, write_json
from .dynamics import SolverError
from .harness import load_plan, load_run_dir, run_single, run_sweep

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3


def _cmd_run(args: argparse.Namespace) -> int:
    run_single(args.config, quiet=args.quiet)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan)
    result = run_sweep(plan)
    ok_rows = [r for r in result.rows if not r.get("failed")]
    for row in result.rows:
        if row.get("failed"):
            print(f"ra = {row['ra']:.3g}  FAILED: {row['failed']}")
        else:
            print(
                f"ra = {row['ra']:.3g}  nu = {row['nu']:.4f}  "
                f"bound = {row['nu_bound_implied']:.4f}  "
                f"steady = {row['steady_flag']}"
            )
    if result.table_path is not None:
        print(f"table: {result.table_path}")
    if math.isfinite(result.fit.beta):
        print(
            f"fit: nu ~ {result.fit.prefactor:.4g} * ra^{result.fit.beta:.4f}"
            f"  (r^2 = {result.fit.r_squared:.4f}, n = {result.fit.n_points})"
        )
    else:
        print("fit: too few steady supercritical rows")
    return EXIT_OK if ok_rows else EXIT_SOLVER


def _pick(cli_value: float | None, calibrated: float | None) -> float:
    """CLI flag wins; else the calibrated value when nondegenerate; else 1."""
    if cli_value is not None:
        return cli_value
    if calibrated is not None and calibrated > 0.0:
        return calibrated
    return 1.0


def _cmd_certify(args: argparse.Namespace) -> int:
    summary, avgs, x2, phys = load_run_dir(args.run_dir)
    calib = None
    calib_note = None
    if args.c0 is None or args.c2 is None or math.isinf(phys.pr):
        datum = CalibrationDatum.from_averages(avgs, x2, label=str(args.run_dir))
        try:
            calib = calibrate_constants([datum])
        except ValueError as exc:
            calib_note = str(exc)
    if math.isinf(phys.pr):
        c0_b = _pick(args.c0, calib["c0_b"] if calib else None)
        c_lap = _pick(None, calib["c_lap"] if calib else None)
        bp, info = choose_parameters_infinite_pr(
            phys, b=args.b, c0_b=c0_b, c_lap=c_lap, x2=x2
        )
        report = certify_infinite_pr(avgs, bp, phys, x2, info)
    else:
        c0 = _pick(args.c0, calib["c0_a"] if calib else None)
        c2 = _pick(args.c2, calib["c2"] if calib else None)
        bp, info = choose_parameters(
            phys, b=args.b, c0=c0, c2=c2, u0_w1r=args.u0, x2=x2
        )
        report = certify(
            avgs, bp, phys, x2, nu_bound_asymptotic=info["nu_bound_asymptotic"]
        )
        report["parameter_info"] = info
    report["dc_bound"] = dc_bound_check(avgs, bp.delta, phys)
    if calib is not None:
        report["calibration"] = {
            k: calib[k] for k in ("c0_a", "c0_b", "c2", "c_lap", "degenerate")
        }
    elif calib_note is not None:
        report["calibration"] = {"degenerate": True, "note": calib_note}
    out_path = Path(args.run_dir) / "certificate.json"
    write_json(out_path, report)
    q_total = report["q_breakdown"]["total"]
    nu = max(report["nu_measured"].values())
    print(f"certified = {report['certified']}  q_total = {q_total:.6g}")
    print(
        f"nu = {nu:.4f}  implied bound = {report['nu_bound_certified']:.4f}"
    )
    if report["violating_term"] is not None:
        print(f"violating term: {report['violating_term']}")
    print(f"certificate: {out_path}")
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else None
    rep = run_checks(config)
    print(json.dumps(_json_sanitize(rep), indent=2))
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slipconvect",
        description="2D slip-wall convection solver with Nusselt bound certification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configured run")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a Ra sweep plan and fit Nu(Ra)")
    p_sweep.add_argument("plan", help="path to a key = value sweep plan file")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cert = sub.add_parser(
        "certify", help="evaluate the Nusselt bound certificate on a finished run"
    )
    p_cert.add_argument("run_dir", help="output directory of a completed run")
    p_cert.add_argument("--b", type=float, default=0.5, help="background weight b")
    p_cert.add_argument(
        "--c0", type=float, default=None,
        help="cross-term constant (default: calibrate from the run)",
    )
    p_cert.add_argument(
        "--c2", type=float, default=None,
        help="pressure constant (default: calibrate from the run)",
    )
    p_cert.add_argument(
        "--u0", type=float, default=0.0, help="initial-data norm entering a0"
    )
    p_cert.set_defaults(func=_cmd_certify)

    p_check = sub.add_parser("check", help="run the self-verification suites")
    p_check.add_argument(
        "config", nargs="?", default=None,
        help="optional config whose grid sizes scale the suites",
    )
    p_check.set_defaults(func=_cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
