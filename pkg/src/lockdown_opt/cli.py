"""Command-line entry point ``lockdown-opt``.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import (
    SOLVERS,
    SWEEP_AXES,
    ConfigError,
    ScenarioConfig,
    SweepConfig,
    load_mapping,
    scenario_from_mapping,
    sweep_from_mapping,
    with_overrides,
)
from .errors import LockdownOptError
from .experiments import (
    HERD_COLUMNS,
    TRAJECTORY_COLUMNS,
    gradient_history_rows,
    herd_table,
    json_ready,
    min_time_summary,
    run_scenario,
    run_sweep,
    scenario_summary,
    trajectory_rows,
    write_csv,
    write_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

TABLE1_R0 = (1.5, 2.0, 2.5, 2.9, 3.0, 3.5)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--beta", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--T", dest="horizon_T", type=float, help="control horizon in days")
    p.add_argument("--dt", type=float)
    p.add_argument("--tol-t", dest="tol_t", type=float)
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lockdown-opt", description="Optimal lockdown timing for the controlled SIR model."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="solve one scenario, write trajectory.csv and summary.json")
    _add_common(p)

    p = sub.add_parser("sweep", help="solve over a range of T, alpha, R0 or t0")
    _add_common(p)
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", type=_float_list, help="comma-separated axis values")

    p = sub.add_parser("herd-table", help="herd threshold and uncontrolled S_inf per R0")
    p.add_argument("--r0", type=_float_list, default=list(TABLE1_R0))
    p.add_argument("--s0", type=float, default=1.0 - 1e-6)
    p.add_argument("--out-dir", dest="out_dir", default="out")

    p = sub.add_parser("min-time", help="shortest horizon ending within epsilon of herd immunity")
    _add_common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--tol-T", dest="tol_T", type=float, default=0.1)

    p = sub.add_parser("gradient", help="projected-gradient search over general controls")
    _add_common(p)
    p.add_argument("--tol", dest="gradient_tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    return parser


def _scenario_config(args) -> tuple[ScenarioConfig, dict]:
    data = load_mapping(args.config) if args.config else {}
    cfg = scenario_from_mapping(data)
    cfg = with_overrides(cfg, vars(args))
    return cfg, data


def _cmd_scenario(args) -> int:
    cfg, _ = _scenario_config(args)
    summary = run_scenario(cfg.validate())
    print(json.dumps(json_ready(summary), sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg, data = _scenario_config(args)
    if args.axis is not None and args.values is not None:
        sweep = SweepConfig(args.axis, tuple(args.values), cfg)
    else:
        sweep = sweep_from_mapping(data, cfg)
        if args.axis is not None:
            sweep = SweepConfig(args.axis, sweep.values, cfg)
        if args.values is not None:
            sweep = SweepConfig(sweep.axis, tuple(args.values), cfg)
    rows = run_sweep(sweep.validate())
    failed = sum(1 for r in rows if r.get("error"))
    print(f"{len(rows)} points, {failed} failed -> {Path(cfg.out_dir) / f'sweep_{sweep.axis}.csv'}")
    return EXIT_OK


def _cmd_herd_table(args) -> int:
    rows = herd_table(args.r0, args.s0)
    write_csv(Path(args.out_dir) / "herd_table.csv", HERD_COLUMNS, rows)
    print(f"{'R0':>6} {'S_herd':>8} {'S_inf':>8} {'ratio':>7}")
    for r in rows:
        print(f"{r['R0']:6.2f} {r['S_herd']:8.4f} {r['S_inf']:8.4f} {100 * r['ratio']:6.1f}%")
    return EXIT_OK


def _cmd_min_time(args) -> int:
    cfg, _ = _scenario_config(args)
    cfg.validate()
    summary = min_time_summary(cfg, args.epsilon, args.tol_T)
    write_json(Path(cfg.out_dir) / "min_time.json", summary)
    print(json.dumps(json_ready(summary), sort_keys=True))
    return EXIT_OK


def _cmd_gradient(args) -> int:
    cfg, _ = _scenario_config(args)
    cfg = with_overrides(cfg, {"solver": "gradient"}).validate()
    result, history = gradient_history_rows(cfg)
    out = Path(cfg.out_dir)
    summary = scenario_summary(cfg, result)
    write_csv(out / "gradient_history.csv", ("iteration", "s_inf", "step"), history)
    write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(cfg, result.control))
    write_json(out / "summary.json", summary)
    print(json.dumps(json_ready(summary), sort_keys=True))
    if not result.converged:
        print("warning: gradient search hit max_iters before converging", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "scenario": _cmd_scenario,
    "sweep": _cmd_sweep,
    "herd-table": _cmd_herd_table,
    "min-time": _cmd_min_time,
    "gradient": _cmd_gradient,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LockdownOptError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
