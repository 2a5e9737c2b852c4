"""Controlled SIR dynamics: domain types, RK4 integration and the conserved quantity.

The model is

    S' = -u * beta * S * I
    I' =  u * beta * S * I - nu * I
    R' =  nu * I

with all compartments stored as fractions of the total population and
``u(t)`` the transmission multiplier (1 = no intervention, 0 = total lockdown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .errors import DomainError, GridMismatchError, IntegrationError, PreconditionError

DEFAULT_DT = 0.01

# Parameters estimated for France before the March-May 2020 lockdown.
TABLE2_BETA = 0.29
TABLE2_NU = 0.1
TABLE2_ALPHA_LOCK = 0.231
TABLE2_POPULATION = 6.7e7
TABLE2_INFECTED = 1e3

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class EpidemicParams:
    """Transmission rate ``beta`` and removal rate ``nu`` (both per day)."""

    beta: float
    nu: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise PreconditionError(f"beta must be a positive finite rate, got {self.beta!r}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise PreconditionError(f"nu must be a positive finite rate, got {self.nu!r}")
        if self.beta <= self.nu:
            raise PreconditionError(
                f"basic reproduction number beta/nu = {self.beta / self.nu:.6g} must exceed 1"
            )

    @property
    def r0(self) -> float:
        return self.beta / self.nu

    @property
    def s_herd(self) -> float:
        return self.nu / self.beta

    @classmethod
    def from_r0(cls, r0: float, nu: float) -> "EpidemicParams":
        return cls(beta=r0 * nu, nu=nu)


@dataclass(frozen=True)
class EpidemicState:
    """Compartment fractions at time ``t`` (days)."""

    s: float
    i: float
    r: float
    t: float = 0.0

    def __post_init__(self):
        values = (self.s, self.i, self.r, self.t)
        if not all(math.isfinite(v) for v in values):
            raise PreconditionError(f"state has non-finite entries: {values}")
        if self.s <= 0:
            raise PreconditionError(f"susceptible fraction must be positive, got {self.s}")
        if self.i < 0 or self.r < 0:
            raise PreconditionError(f"fractions must be nonnegative, got i={self.i}, r={self.r}")
        total = self.s + self.i + self.r
        if abs(total - 1.0) > _MASS_TOL:
            raise PreconditionError(f"fractions must sum to 1, got {total!r}")

    @classmethod
    def from_counts(
        cls,
        population: float,
        infected: float,
        susceptible: float | None = None,
        t: float = 0.0,
    ) -> "EpidemicState":
        """Convert head counts to fractions; the removed compartment takes the remainder."""
        if not population > 0:
            raise PreconditionError(f"population must be positive, got {population}")
        i = infected / population
        s = 1.0 - i if susceptible is None else susceptible / population
        r = 1.0 - s - i
        if abs(r) < 1e-15:
            r = 0.0
        return cls(s=s, i=i, r=r, t=t)

    @classmethod
    def from_fractions(cls, s: float, i: float, t: float = 0.0) -> "EpidemicState":
        r = 1.0 - s - i
        if abs(r) < 1e-15:
            r = 0.0
        return cls(s=s, i=i, r=r, t=t)


def table2_params() -> EpidemicParams:
    return EpidemicParams(beta=TABLE2_BETA, nu=TABLE2_NU)


def table2_state() -> EpidemicState:
    return EpidemicState.from_counts(TABLE2_POPULATION, TABLE2_INFECTED)


@dataclass(frozen=True, eq=False)
class PiecewiseControl:
    """Piecewise-constant control on ``[0, horizon_T]``, equal to 1 afterwards.

    ``values[j]`` applies on ``[breakpoints[j], breakpoints[j+1])``; the last
    value runs up to ``horizon_T``.
    """

    alpha: float
    horizon_T: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if not 0.0 <= self.alpha < 1.0:
            raise PreconditionError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.horizon_T > 0:
            raise PreconditionError(f"horizon_T must be positive, got {self.horizon_T}")
        if bp.size == 0 or bp.size != vals.size:
            raise PreconditionError("need one control value per breakpoint")
        if bp[0] != 0.0:
            raise PreconditionError(f"first breakpoint must be 0, got {bp[0]}")
        if np.any(np.diff(bp) <= 0):
            raise PreconditionError("breakpoints must be strictly increasing")
        if bp[-1] > self.horizon_T:
            raise PreconditionError("breakpoints must not exceed horizon_T")
        # Small slack lets callers clip in float arithmetic without tripping this.
        if np.any(vals < self.alpha - 1e-12) or np.any(vals > 1.0 + 1e-12):
            raise PreconditionError(f"control values must lie in [{self.alpha}, 1]")

    @classmethod
    def constant(cls, alpha: float, horizon_T: float, level: float) -> "PiecewiseControl":
        return cls(alpha, horizon_T, np.array([0.0]), np.array([float(level)]))

    @classmethod
    def from_cells(cls, alpha: float, dt: float, cells: np.ndarray) -> "PiecewiseControl":
        """One value per grid cell of width ``dt`` starting at 0."""
        cells = np.asarray(cells, dtype=float)
        return cls(alpha, cells.size * dt, np.arange(cells.size) * dt, cells)

    def value_at(self, t: float) -> float:
        if t > self.horizon_T or t < 0:
            return 1.0
        j = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return float(self.values[j])

    def cell_values(self, dt: float, n_cells: int) -> np.ndarray:
        """Sample onto ``n_cells`` grid cells of width ``dt``.

        Breakpoints and the horizon snap to the nearest grid node. Snapping
        that collapses an interval (two breakpoints on one node) is an error.
        """
        nodes = np.rint(self.breakpoints / dt).astype(np.int64)
        end = int(round(self.horizon_T / dt))
        offsets = np.abs(self.breakpoints - nodes * dt)
        if np.any(offsets > 0.5 * dt * (1 + 1e-9)):
            raise GridMismatchError("breakpoint lies more than dt/2 from every grid node")
        edges = np.append(nodes, end)
        lengths = np.diff(np.append(self.breakpoints, self.horizon_T))
        if np.any((lengths > 0) & (np.diff(edges) <= 0)):
            raise GridMismatchError(
                f"control intervals collapse when snapped to a grid of step {dt}; refine dt"
            )
        out = np.ones(n_cells)
        for j, value in enumerate(self.values):
            lo = min(edges[j], n_cells)
            hi = min(edges[j + 1], n_cells)
            out[lo:hi] = value
        return out


@dataclass(frozen=True)
class BangBangControl:
    """Full activity on ``[0, t0]``, level ``alpha`` on ``(t0, T]``, 1 afterwards."""

    t0: float
    alpha: float
    horizon_T: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise PreconditionError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.horizon_T > 0:
            raise PreconditionError(f"horizon_T must be positive, got {self.horizon_T}")
        if not 0.0 <= self.t0 <= self.horizon_T:
            raise PreconditionError(f"switch time {self.t0} outside [0, {self.horizon_T}]")

    def value_at(self, t: float) -> float:
        return self.alpha if self.t0 < t <= self.horizon_T else 1.0

    def to_piecewise(self) -> PiecewiseControl:
        if self.t0 == 0.0:
            bp, vals = [0.0], [self.alpha]
        elif self.t0 == self.horizon_T:
            bp, vals = [0.0], [1.0]
        else:
            bp, vals = [0.0, self.t0], [1.0, self.alpha]
        return PiecewiseControl(self.alpha, self.horizon_T, np.array(bp), np.array(vals))


Control = Union[PiecewiseControl, BangBangControl]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution on a uniform grid; ``control_samples[k]`` acts on cell k."""

    grid: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    control_samples: np.ndarray
    dt: float
    cells: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("grid", "s", "i", "r", "control_samples", "cells"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def state_at(self, k: int) -> EpidemicState:
        return EpidemicState(float(self.s[k]), float(self.i[k]), float(self.r[k]), float(self.grid[k]))


def herd_threshold(params) -> float:
    """Susceptible fraction below which the infected count decreases."""
    return params.nu / params.beta


def alpha_bar(params: EpidemicParams, init: EpidemicState) -> float:
    """Largest constant lockdown level that can still stop at herd immunity."""
    s_herd = herd_threshold(params)
    if not init.s > s_herd:
        raise PreconditionError(
            f"alpha_bar needs S0 > S_herd, got S0={init.s} and S_herd={s_herd}"
        )
    return s_herd / (init.s + init.i - s_herd) * (math.log(init.s) - math.log(s_herd))


def phi(gamma, s, i):
    """``s + i - ln(s)/gamma``; constant along trajectories with ``u = gamma/R0``."""
    if np.any(np.asarray(gamma) <= 0):
        raise DomainError(f"gamma must be positive, got {gamma}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)):
        raise DomainError("phi is only defined for s > 0")
    out = s_arr + np.asarray(i, dtype=float) - np.log(s_arr) / gamma
    return float(out) if out.ndim == 0 else out


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise IntegrationError("non-finite state produced by RK4; reduce dt")


def _check_level(u: float):
    if not 0.0 <= u <= 1.0:
        raise PreconditionError(f"control level must lie in [0, 1], got {u}")


def rk4_step(state: EpidemicState, u: float, params: EpidemicParams, dt: float) -> EpidemicState:
    """One classical RK4 step with ``u`` held constant over the step."""
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    _check_level(u)
    s, i, r = _kernels.rk4_sir_removed(state.s, state.i, state.r, u, params.beta, params.nu, dt)
    _check_finite(s, i, r)
    try:
        return EpidemicState(s, i, r, state.t + dt)
    except PreconditionError as exc:
        raise IntegrationError(f"RK4 step left the state space ({exc}); reduce dt") from None


def grid_size(t_end: float, dt: float) -> int:
    """Number of cells of width ``dt`` covering ``[0, t_end]`` exactly."""
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    if not t_end > 0:
        raise PreconditionError(f"t_end must be positive, got {t_end}")
    n = int(round(t_end / dt))
    if n < 1 or abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise GridMismatchError(f"t_end={t_end} is not a multiple of dt={dt}")
    return n


def integrate_cells(
    params: EpidemicParams, init: EpidemicState, cells: np.ndarray, dt: float
) -> Trajectory:
    """Integrate with an explicit array of per-cell control values."""
    cells = np.ascontiguousarray(cells, dtype=float)
    s, i, r = _kernels.path_cells(init.s, init.i, init.r, cells, params.beta, params.nu, dt)
    _check_finite(s, i, r)
    grid = init.t + dt * np.arange(cells.size + 1)
    samples = np.append(cells, 1.0 if cells.size == 0 else cells[-1])
    return Trajectory(grid, s, i, r, samples, dt, cells)


def integrate(
    params: EpidemicParams,
    init: EpidemicState,
    control: Control,
    t_end: float,
    dt: float = DEFAULT_DT,
) -> Trajectory:
    """Sample the controlled solution on ``[0, t_end]`` with fixed step ``dt``.

    Control breakpoints are snapped to grid nodes; the control is 1 past its
    horizon.
    """
    if init.t != 0.0:
        raise PreconditionError("integration starts at t = 0; shift the initial state")
    n = grid_size(t_end, dt)
    if isinstance(control, BangBangControl):
        control = control.to_piecewise()
    cells = control.cell_values(dt, n)
    return integrate_cells(params, init, cells, dt)


def advance_state(
    params: EpidemicParams, s: float, i: float, u: float, duration: float, dt: float = DEFAULT_DT
) -> tuple[float, float]:
    """(S, I) after ``duration`` days at constant control ``u``.

    Uses full ``dt`` steps and one final partial step, so the switch time of
    a bang-bang control need not sit on a grid node.
    """
    if duration < 0:
        raise PreconditionError(f"duration must be nonnegative, got {duration}")
    s, i = _kernels.advance(s, i, u, params.beta, params.nu, duration, dt)
    _check_finite(s, i)
    return s, i
