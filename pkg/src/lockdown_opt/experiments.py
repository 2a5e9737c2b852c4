"""Scenario runs, parameter sweeps and herd tables, with deterministic output files."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .adjoint import equivalent_switch_time, projected_gradient
from .config import ScenarioConfig, SweepConfig
from .errors import LockdownOptError, PreconditionError
from .min_time import minimal_time
from .sinf import s_infinity_from_state
from .sir_core import (
    BangBangControl,
    EpidemicParams,
    alpha_bar,
    integrate,
)
from .switching import (
    j_phi,
    j_value,
    optimal_t0,
    optimal_t0_alpha_zero,
    psi,
    trisection_t0,
)

SCHEMA_LINE = "# lockdown-opt schema v1"
THREADS_ENV = "LOCKDOWN_OPT_THREADS"
SWEEP_COLUMNS = ("axis_value", "t0_star", "s_inf_star", "psi0", "method", "residual", "j_phi", "error")
TRAJECTORY_COLUMNS = ("t", "S", "I", "R", "u")
HERD_COLUMNS = ("R0", "S_herd", "S_inf", "ratio")


@dataclass(frozen=True)
class SolveResult:
    t0_star: float
    s_inf_star: float
    psi0: float
    method: str
    iterations: int
    residual: float
    control: object  # BangBangControl or PiecewiseControl
    converged: bool = True


def fmt(value) -> str:
    """12 significant digits; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.12g}"


def json_ready(value):
    if isinstance(value, float):
        return float(f"{value:.12g}") if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: json_ready(v) for k, v in value.items()}
    return value


def write_csv(path: Path, columns, rows):
    lines = [SCHEMA_LINE, ",".join(columns)]
    lines += [",".join(fmt(row.get(c)) for c in columns) for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def solve(config: ScenarioConfig) -> SolveResult:
    """Run the configured solver. psi-root hands alpha = 0 to the total-lockdown branch."""
    params, init = config.params(), config.initial_state()
    alpha, T, dt = config.alpha, config.horizon_T, config.dt
    if config.solver == "gradient":
        return _solve_gradient(config)[0]
    if config.solver == "trisection":
        report = trisection_t0(params, init, alpha, T, dt, config.trisection_k)
    elif alpha == 0.0:
        report = optimal_t0_alpha_zero(params, init, T, dt, config.tol_t)
    else:
        report = optimal_t0(params, init, alpha, T, dt, config.tol_t)
    return SolveResult(
        report.t0_star,
        report.s_inf_star,
        report.psi_at_zero,
        report.method,
        report.iterations,
        report.residual,
        BangBangControl(report.t0_star, alpha, T),
    )


def trajectory_rows(config: ScenarioConfig, control) -> list[dict]:
    """Sampled solution on [0, 2T]; the control is 1 after T.

    A bang-bang switch is rounded to the nearest grid node first so that a
    switch within dt/2 of 0 or T does not collapse an interval.
    """
    params, init = config.params(), config.initial_state()
    T, dt = config.horizon_T, config.dt
    if isinstance(control, BangBangControl):
        t0 = min(round(control.t0 / dt) * dt, T)
        control = BangBangControl(t0, control.alpha, T)
    traj = integrate(params, init, control, 2 * T, dt)
    return [
        {"t": t, "S": s, "I": i, "R": r, "u": u}
        for t, s, i, r, u in zip(traj.grid, traj.s, traj.i, traj.r, traj.control_samples)
    ]


def _alpha_bar_or_none(params, init):
    try:
        return alpha_bar(params, init)
    except PreconditionError:
        return None


def scenario_summary(config: ScenarioConfig, result: SolveResult) -> dict:
    params, init = config.params(), config.initial_state()
    return {
        "schema": 1,
        "solver": config.solver,
        "method": result.method,
        "beta": config.beta,
        "nu": config.nu,
        "R0": params.r0,
        "alpha": config.alpha,
        "horizon_T": config.horizon_T,
        "dt": config.dt,
        "S0": init.s,
        "I0": init.i,
        "t0_star": result.t0_star,
        "s_inf_star": result.s_inf_star,
        "s_inf_uncontrolled": s_infinity_from_state(params, init.s, init.i),
        "psi0": result.psi0,
        "alpha_bar": _alpha_bar_or_none(params, init),
        "s_herd": params.s_herd,
        "diagnostics": {
            "iterations": result.iterations,
            "residual": result.residual,
            "converged": result.converged,
        },
    }


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> dict:
    """Solve one scenario; write ``trajectory.csv`` and ``summary.json``."""
    config.validate()
    out = Path(out_dir if out_dir is not None else config.out_dir)
    result = solve(config)
    summary = scenario_summary(config, result)
    write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(config, result.control))
    write_json(out / "summary.json", summary)
    return summary


def _point_config(sweep: SweepConfig, value: float) -> ScenarioConfig:
    base = sweep.fixed
    if sweep.axis == "T":
        return replace(base, horizon_T=value)
    if sweep.axis == "alpha":
        return replace(base, alpha=value)
    if sweep.axis == "R0":
        return replace(base, beta=value * base.nu)
    return base


def _sweep_point(sweep: SweepConfig, value: float) -> dict:
    row = {"axis_value": value}
    try:
        cfg = _point_config(sweep, value)
        if cfg.solver == "alpha-zero" and cfg.alpha != 0.0:
            cfg = replace(cfg, solver="psi-root")
        cfg.validate()
        params, init = cfg.params(), cfg.initial_state()
        if sweep.axis == "t0":
            row.update(
                t0_star=value,
                s_inf_star=j_value(params, init, cfg.alpha, cfg.horizon_T, value, cfg.dt),
                psi0=psi(params, init, cfg.alpha, cfg.horizon_T, 0.0, cfg.dt),
                method="evaluate",
                residual=psi(params, init, cfg.alpha, cfg.horizon_T, value, cfg.dt),
                j_phi=j_phi(params, init, cfg.alpha, cfg.horizon_T, value, cfg.dt),
            )
            return row
        result = solve(cfg)
        row.update(
            t0_star=result.t0_star,
            s_inf_star=result.s_inf_star,
            psi0=result.psi0,
            method=result.method,
            residual=result.residual,
            j_phi=j_phi(params, init, cfg.alpha, cfg.horizon_T, min(result.t0_star, cfg.horizon_T), cfg.dt),
        )
    except (LockdownOptError, ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    return row


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def run_sweep(sweep: SweepConfig, out_dir: str | Path | None = None) -> list[dict]:
    """Solve every sweep point (in parallel); rows keep the input order.

    A failing point is recorded in its row's ``error`` column and does not
    stop the sweep.
    """
    sweep.validate()
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(lambda v: _sweep_point(sweep, v), sweep.values))
    out = Path(out_dir if out_dir is not None else sweep.fixed.out_dir)
    write_csv(out / f"sweep_{sweep.axis}.csv", SWEEP_COLUMNS, rows)
    return rows


def herd_table(r0_values, s0: float = 1.0 - 1e-6) -> list[dict]:
    """Herd threshold, uncontrolled S_inf and the share of infections past the
    threshold, ``(S_herd - S_inf)/(1 - S_inf)``, for each R0.

    None of these depend on nu, so nu = 1 is used internally.
    """
    if not 0.0 < s0 < 1.0:
        raise PreconditionError(f"S0 must lie in (0, 1), got {s0}")
    rows = []
    for r0 in r0_values:
        params = EpidemicParams.from_r0(float(r0), nu=1.0)
        s_inf = s_infinity_from_state(params, s0, 1.0 - s0)
        ratio = (params.s_herd - s_inf) / (1.0 - s_inf)
        rows.append({"R0": float(r0), "S_herd": params.s_herd, "S_inf": s_inf, "ratio": ratio})
    return rows


def min_time_summary(config: ScenarioConfig, epsilon: float, tol_T: float) -> dict:
    params, init = config.params(), config.initial_state()
    report = minimal_time(params, init, config.alpha, epsilon, tol_T, config.dt)
    return {
        "schema": 1,
        "alpha": config.alpha,
        "beta": config.beta,
        "nu": config.nu,
        "epsilon": epsilon,
        "target": params.s_herd - epsilon,
        "t_star": report.t_star,
        "t0_star_at_t_star": report.t0_star_at_t_star,
        "s_inf_achieved": report.s_inf_achieved,
        "bracket_width": report.bracket_width,
        "alpha_bar": _alpha_bar_or_none(params, init),
    }


def _solve_gradient(config: ScenarioConfig):
    params, init = config.params(), config.initial_state()
    alpha, dt = config.alpha, config.dt
    run = projected_gradient(
        params, init, alpha, config.horizon_T,
        tol=config.gradient_tol, max_iters=config.max_iters, dt=dt,
    )
    final = run.final
    cells = final.control.cell_values(dt, final.control.breakpoints.size)
    gain = final.objective - run.history[-2].objective if len(run.history) > 1 else 0.0
    result = SolveResult(
        t0_star=equivalent_switch_time(cells, alpha, dt),
        s_inf_star=final.objective,
        psi0=psi(params, init, alpha, config.horizon_T, 0.0, dt),
        method="gradient",
        iterations=final.iteration,
        residual=gain,
        control=final.control,
        converged=run.converged,
    )
    return result, run


def gradient_history_rows(config: ScenarioConfig) -> tuple[SolveResult, list[dict]]:
    """Solve with projected gradient; also return one row per accepted iterate."""
    result, run = _solve_gradient(config)
    rows = [{"iteration": h.iteration, "s_inf": h.objective, "step": h.step} for h in run.history]
    return result, rows
