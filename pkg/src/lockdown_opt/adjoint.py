"""Costate integration and projected-gradient search over general controls.

The costate (p_S, p_I) solves

    p_S' = beta*u*I*(p_S - p_I)
    p_I' = beta*u*S*p_S - (beta*u*S - nu)*p_I + nu*(u - 1)

backwards from p_S(T) = p_I(T) = 0. With it, the derivative of the terminal
cost J = phi(R0, S(T), I(T)) in direction h is the integral of g*h, where
g = (nu - beta*S*(p_I - p_S))*I. Since phi(R0, S_inf, 0) = J, the derivative
of S_inf is that integral divided by 1 - 1/(R0*S_inf), which is negative:
lowering J raises S_inf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import GridMismatchError, PreconditionError
from .sinf import s_infinity_from_state
from .sir_core import (
    DEFAULT_DT,
    Control,
    EpidemicParams,
    EpidemicState,
    BangBangControl,
    PiecewiseControl,
    Trajectory,
    grid_size,
    integrate_cells,
    phi,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 5000
MIN_STEP = 1e-12


@dataclass(frozen=True, eq=False)
class AdjointTrajectory:
    grid: np.ndarray
    p_s: np.ndarray
    p_i: np.ndarray
    cell_gradient: np.ndarray = field(repr=False)
    """Integral of the gradient density over each cell (gradient of J)."""


@dataclass(frozen=True, eq=False)
class GradientIterate:
    control: PiecewiseControl | None
    objective: float
    step: float
    iteration: int


@dataclass(frozen=True, eq=False)
class GradientRun:
    history: list
    converged: bool
    reason: str

    @property
    def final(self) -> GradientIterate:
        return self.history[-1]


def _window_cells(traj: Trajectory, control: Control | None) -> np.ndarray:
    if control is None:
        return traj.cells
    if isinstance(control, BangBangControl):
        control = control.to_piecewise()
    n = int(round(control.horizon_T / traj.dt))
    if n > traj.cells.size or abs(n * traj.dt - control.horizon_T) > 1e-9 * max(1.0, control.horizon_T):
        raise GridMismatchError("trajectory does not cover the control window on its grid")
    cells = control.cell_values(traj.dt, n)
    if not np.array_equal(cells, traj.cells[:n]):
        raise GridMismatchError("trajectory was not produced by this control on this grid")
    return cells


def integrate_adjoint(
    traj: Trajectory, control: Control | None, params: EpidemicParams
) -> AdjointTrajectory:
    """Backward RK4 on the trajectory's own grid, restricted to the control window."""
    cells = np.ascontiguousarray(_window_cells(traj, control))
    n = cells.size
    s = np.ascontiguousarray(traj.s[: n + 1])
    i = np.ascontiguousarray(traj.i[: n + 1])
    ps, pi = _kernels.adjoint_cells(s, i, cells, params.beta, params.nu, traj.dt)
    grad = _kernels.cell_gradient(s, i, ps, pi, cells, params.beta, params.nu, traj.dt)
    return AdjointTrajectory(traj.grid[: n + 1], ps, pi, grad)


def gradient_density(traj: Trajectory, adj: AdjointTrajectory, params: EpidemicParams) -> np.ndarray:
    """Node values of ``(nu - beta*S*(p_I - p_S))*I``, the gradient of J."""
    n = adj.grid.size
    s, i = traj.s[:n], traj.i[:n]
    return (params.nu - params.beta * s * (adj.p_i - adj.p_s)) * i


def switching_function(traj: Trajectory, adj: AdjointTrajectory) -> np.ndarray:
    """``S*(p_S - p_I)``; compared against -1/R0 by the maximum principle."""
    n = adj.grid.size
    return traj.s[:n] * (adj.p_s - adj.p_i)


def s_inf_slope_factor(params: EpidemicParams, s_inf: float) -> float:
    """dS_inf/dJ = 1 / (1 - 1/(R0*S_inf))."""
    return 1.0 / (1.0 - 1.0 / (params.r0 * s_inf))


def j_directional_derivative(adj: AdjointTrajectory, h_cells: np.ndarray) -> float:
    """Derivative of J in the direction of a per-cell perturbation."""
    h = np.asarray(h_cells, dtype=float)
    if h.shape != adj.cell_gradient.shape:
        raise GridMismatchError("direction must have one value per control cell")
    return float(np.dot(adj.cell_gradient, h))


def s_inf_directional_derivative(
    params: EpidemicParams, traj: Trajectory, adj: AdjointTrajectory, h_cells: np.ndarray
) -> float:
    n = adj.grid.size - 1
    s_inf = s_infinity_from_state(params, float(traj.s[n]), float(traj.i[n]))
    return s_inf_slope_factor(params, s_inf) * j_directional_derivative(adj, h_cells)


def s_inf_of_cells(params: EpidemicParams, init: EpidemicState, cells: np.ndarray, dt: float) -> float:
    traj = integrate_cells(params, init, cells, dt)
    return s_infinity_from_state(params, float(traj.s[-1]), float(traj.i[-1]))


def equivalent_switch_time(cells: np.ndarray, alpha: float, dt: float) -> float:
    """Switch time of a near-bang-bang control: first cell below the midpoint
    level, refined by that cell's fractional value."""
    cells = np.asarray(cells, dtype=float)
    below = np.flatnonzero(cells < 0.5 * (1.0 + alpha))
    if below.size == 0:
        return cells.size * dt
    k = int(below[0])
    frac = float(np.clip((cells[k] - alpha) / (1.0 - alpha), 0.0, 1.0))
    return (k + frac) * dt


def projected_gradient(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    u0: Control | None = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    dt: float = DEFAULT_DT,
    rho0: float = 1.0,
    record_controls: bool = False,
) -> GradientRun:
    """Maximize S_inf over controls with one value per grid cell.

    Each iteration moves against the gradient density of J (so S_inf rises),
    clips to [alpha, 1], and backtracks by halving from twice the previous
    accepted step (the first iteration starts at ``rho0``) until S_inf
    strictly increases. Stops when the gain drops to ``tol`` or below.

    Only the first and last iterates keep their control unless
    ``record_controls`` is set; a 10^4-cell control per iterate adds up.
    """
    if not 0.0 <= alpha < 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1), got {alpha}")
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    if init.t != 0.0:
        raise PreconditionError("integration starts at t = 0")
    n = grid_size(T, dt)
    if u0 is None:
        u0 = PiecewiseControl.constant(alpha, T, 1.0)
    elif isinstance(u0, BangBangControl):
        u0 = u0.to_piecewise()
    if u0.alpha != alpha or abs(u0.horizon_T - T) > 1e-12:
        raise PreconditionError("initial control must belong to the same admissible set")
    u = np.clip(u0.cell_values(dt, n), alpha, 1.0)

    def as_control(cells):
        return PiecewiseControl.from_cells(alpha, dt, cells.copy())

    traj = integrate_cells(params, init, u, dt)
    objective = s_infinity_from_state(params, float(traj.s[-1]), float(traj.i[-1]))
    history = [GradientIterate(as_control(u), objective, 0.0, 0)]
    rho_start = rho0
    converged, reason = False, "max_iters reached"

    for it in range(1, max_iters + 1):
        adj = integrate_adjoint(traj, None, params)
        density = adj.cell_gradient / dt
        rho = rho_start
        accepted = None
        while rho >= MIN_STEP:
            trial = np.clip(u - rho * density, alpha, 1.0)
            trial_traj = integrate_cells(params, init, trial, dt)
            trial_obj = s_infinity_from_state(
                params, float(trial_traj.s[-1]), float(trial_traj.i[-1])
            )
            if trial_obj > objective:
                accepted = (trial, trial_traj, trial_obj)
                break
            rho *= 0.5
        if accepted is None:
            converged, reason = True, "no ascent step above the minimum step size"
            break
        gain = accepted[2] - objective
        u, traj, objective = accepted
        history.append(
            GradientIterate(as_control(u) if record_controls else None, objective, rho, it)
        )
        rho_start = 2.0 * rho
        if gain <= tol:
            converged, reason = True, "objective gain below tolerance"
            break

    if not record_controls:
        last = history[-1]
        history[-1] = GradientIterate(as_control(u), last.objective, last.step, last.iteration)
    if not converged:
        log.warning("projected gradient stopped after %d iterations without meeting tol", max_iters)
    return GradientRun(history, converged, reason)


def terminal_cost(params: EpidemicParams, traj: Trajectory, n: int) -> float:
    return phi(params.r0, float(traj.s[n]), float(traj.i[n]))
