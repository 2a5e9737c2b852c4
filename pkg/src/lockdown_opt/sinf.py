"""Asymptotic susceptible fraction from a terminal state.

Once the control returns to 1 the quantity ``phi(R0, S, I)`` is conserved and
``I -> 0``, so the limit ``S_inf`` is the smallest root of
``phi(R0, x, 0) = phi(R0, S(T), I(T))``. No long-horizon integration is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketError, PreconditionError
from .sir_core import (
    DEFAULT_DT,
    BangBangControl,
    Control,
    EpidemicParams,
    EpidemicState,
    advance_state,
    integrate,
    phi,
)

SMALLEST_S = 1e-14
_AT_MINIMUM_TOL = 1e-12


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise PreconditionError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


def bisect_decreasing(f, bracket: RootBracket) -> float:
    """Root of a decreasing function on ``bracket``.

    Runs until the interval is below ``bracket.tol`` and cannot be split any
    further in floating point, which keeps the residual small even when the
    slope is steep near zero.
    """
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo < 0 or f_hi > 0:
        if abs(f_lo) <= bracket.tol:
            return lo
        if abs(f_hi) <= bracket.tol:
            return hi
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid > 0:
            lo = mid
        elif f_mid < 0:
            hi = mid
        else:
            return mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def _smallest_root(gamma: float, level: float, upper: float) -> float:
    """Smallest x in (0, upper] with phi(gamma, x, 0) = level.

    ``phi(gamma, ., 0)`` decreases on (0, 1/gamma]; ``upper`` must not exceed
    that point.
    """
    inv = 1.0 / gamma
    bottom = upper - math.log(upper) * inv
    if level - bottom <= _AT_MINIMUM_TOL:
        return upper
    return bisect_decreasing(
        lambda x: x - math.log(x) * inv - level, RootBracket(SMALLEST_S, upper)
    )


def s_infinity_from_state(params: EpidemicParams, s_T: float, i_T: float) -> float:
    """Limit of S when the control is 1 from state (s_T, i_T) onwards."""
    if not s_T > 0:
        raise PreconditionError(f"s_T must be positive, got {s_T}")
    if not i_T >= 0:
        raise PreconditionError(f"i_T must be nonnegative, got {i_T}")
    s_herd = params.s_herd
    if i_T == 0.0 and s_T <= s_herd:
        return s_T
    level = phi(params.r0, s_T, i_T)
    if not math.isfinite(level):
        raise BracketError(f"non-finite conserved quantity for state ({s_T}, {i_T})")
    return _smallest_root(params.r0, level, s_herd)


def s_infinity_of_control(
    params: EpidemicParams,
    init: EpidemicState,
    control: Control,
    dt: float = DEFAULT_DT,
) -> float:
    """S_inf for an admissible control.

    Bang-bang controls switch exactly at ``t0`` (partial RK4 step); piecewise
    controls are snapped to the ``dt`` grid.
    """
    s_T, i_T = terminal_state(params, init, control, dt)
    return s_infinity_from_state(params, s_T, i_T)


def terminal_state(
    params: EpidemicParams, init: EpidemicState, control: Control, dt: float = DEFAULT_DT
) -> tuple[float, float]:
    """(S(T), I(T)) at the end of the control window."""
    if isinstance(control, BangBangControl):
        s, i = advance_state(params, init.s, init.i, 1.0, control.t0, dt)
        return advance_state(params, s, i, control.alpha, control.horizon_T - control.t0, dt)
    traj = integrate(params, init, control, control.horizon_T, dt)
    return float(traj.s[-1]), float(traj.i[-1])


def s_infinity_constant_alpha(params: EpidemicParams, init: EpidemicState, alpha: float) -> float:
    """Limit of S under the constant control ``alpha`` on [0, inf)."""
    if not 0.0 <= alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return init.s
    gamma = alpha * params.r0
    upper = min(params.s_herd / alpha, init.s)
    return _smallest_root(gamma, phi(gamma, init.s, init.i), upper)
