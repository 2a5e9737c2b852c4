"""Optimal single-switch lockdown.

The optimal control is bang-bang: no action up to a switch time ``t0`` and
the strongest allowed lockdown ``alpha`` from ``t0`` to the horizon ``T``.
This module locates ``t0``:

* ``optimal_t0``: bisection on the switching function psi, which is strictly
  decreasing with psi(T) = -1;
* ``optimal_t0_alpha_zero``: the closed-form condition for total lockdown;
* ``trisection_t0``: interval-thirds search on the cost j_phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .errors import PreconditionError, UnderflowError
from .sinf import s_infinity_of_control
from .sir_core import (
    DEFAULT_DT,
    BangBangControl,
    EpidemicParams,
    EpidemicState,
    _check_finite,
    advance_state,
    phi,
)

PSI_ROOT = "psi-root"
TRISECTION = "trisection"
ALPHA_ZERO = "alpha-zero-branch"

DEFAULT_TOL_T = 1e-3
DEFAULT_TRISECTION_K = 60

# Smallest infected fraction for which the psi quotients are trusted.
_I_FLOOR = 1e-300


@dataclass(frozen=True)
class SwitchSolveReport:
    t0_star: float
    s_inf_star: float
    psi_at_zero: float
    method: str
    iterations: int
    residual: float


@dataclass(frozen=True)
class _LockdownWindow:
    """States around the switch plus the scaled quadratures over (t0, T)."""

    s_t0: float
    i_t0: float
    s_end: float
    i_end: float
    k_end: float  # I(end) * int_{t0}^{end} S/I
    m_end: float  # I(end) * int_{t0}^{end} 1/I
    i_min: float


def _check_alpha(alpha: float, allow_zero: bool):
    lo_ok = alpha >= 0.0 if allow_zero else alpha > 0.0
    if not (lo_ok and alpha < 1.0):
        bounds = "[0, 1)" if allow_zero else "(0, 1)"
        raise PreconditionError(f"alpha must lie in {bounds}, got {alpha}")


def _check_switch(t0: float, T: float):
    if not T > 0:
        raise PreconditionError(f"horizon T must be positive, got {T}")
    if not 0.0 <= t0 <= T:
        raise PreconditionError(f"switch time {t0} outside [0, {T}]")


def _check_epidemic(init: EpidemicState):
    if not init.i > 0:
        raise PreconditionError("optimizers need I0 > 0: there is no epidemic to control")


def _window(params, init, alpha, t0, t_end, dt) -> _LockdownWindow:
    s0, i0 = advance_state(params, init.s, init.i, 1.0, t0, dt)
    s, i, k, m, i_min = _kernels.advance_quad(s0, i0, alpha, params.beta, params.nu, t_end - t0, dt)
    _check_finite(s, i, k, m)
    return _LockdownWindow(s0, i0, s, i, k, m, i_min)


def _require_positive_infected(w: _LockdownWindow):
    if not w.i_min > _I_FLOOR:
        raise UnderflowError(
            "infected fraction underflows during the lockdown; psi is meaningless here, "
            "use j_phi_closed_form instead"
        )


def j_value(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    dt: float = DEFAULT_DT,
) -> float:
    """S_inf reached by switching to lockdown ``alpha`` at ``t0``."""
    return s_infinity_of_control(params, init, BangBangControl(t0, alpha, T), dt)


def j_phi(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    dt: float = DEFAULT_DT,
) -> float:
    """phi(R0, S(T), I(T)) for the bang-bang control; minimized where j is maximized."""
    _check_switch(t0, T)
    s, i = advance_state(params, init.s, init.i, 1.0, t0, dt)
    s, i = advance_state(params, s, i, alpha, T - t0, dt)
    return phi(params.r0, s, i)


def psi(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    dt: float = DEFAULT_DT,
) -> float:
    """Switching function ``(1-alpha)*beta*I(T)*int_{t0}^T S/I dt - 1``.

    Zero exactly at the optimal switch when the optimum is interior.
    """
    _check_alpha(alpha, allow_zero=True)
    _check_switch(t0, T)
    _check_epidemic(init)
    w = _window(params, init, alpha, t0, T, dt)
    _require_positive_infected(w)
    return (1.0 - alpha) * params.beta * w.k_end - 1.0


def psi_rescaled(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    dt: float = DEFAULT_DT,
) -> float:
    """Equivalent form ``(1/alpha - 1)(I(T)/I(t0) + nu*int I(T)/I ds - 1/(1-alpha))``."""
    _check_alpha(alpha, allow_zero=False)
    _check_switch(t0, T)
    _check_epidemic(init)
    w = _window(params, init, alpha, t0, T, dt)
    _require_positive_infected(w)
    return (1.0 / alpha - 1.0) * (
        w.i_end / w.i_t0 + params.nu * w.m_end - 1.0 / (1.0 - alpha)
    )


def optimal_t0(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    dt: float = DEFAULT_DT,
    tol_t: float = DEFAULT_TOL_T,
) -> SwitchSolveReport:
    """Optimal switch time for ``0 < alpha < 1`` by bisection on psi."""
    _check_alpha(alpha, allow_zero=False)
    _check_switch(0.0, T)
    _check_epidemic(init)
    if not tol_t > 0:
        raise PreconditionError(f"tol_t must be positive, got {tol_t}")

    psi0 = psi(params, init, alpha, T, 0.0, dt)
    if psi0 <= 0.0:
        s_inf = j_value(params, init, alpha, T, 0.0, dt)
        return SwitchSolveReport(0.0, s_inf, psi0, PSI_ROOT, 0, abs(psi0))

    lo, hi = 0.0, T
    iterations = 0
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        if psi(params, init, alpha, T, mid, dt) > 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    t0 = 0.5 * (lo + hi)
    residual = abs(psi(params, init, alpha, T, t0, dt))
    s_inf = j_value(params, init, alpha, T, t0, dt)
    return SwitchSolveReport(t0, s_inf, psi0, PSI_ROOT, iterations, residual)


def alpha_zero_threshold(params: EpidemicParams, init: EpidemicState) -> float:
    """Horizon above which total lockdown should not start immediately."""
    s_herd = params.s_herd
    if init.s <= s_herd:
        return math.inf
    return math.log(init.s / (init.s - s_herd)) / params.nu


def optimal_t0_alpha_zero(
    params: EpidemicParams,
    init: EpidemicState,
    T: float,
    dt: float = DEFAULT_DT,
    tol_t: float = DEFAULT_TOL_T,
) -> SwitchSolveReport:
    """Optimal switch into total lockdown (alpha = 0).

    Solves ``S(t0) = S_herd / (1 - exp(nu*(t0 - T)))`` along the uncontrolled
    trajectory; the left side decreases and the right side increases in t0.
    """
    _check_switch(0.0, T)
    _check_epidemic(init)
    if not tol_t > 0:
        raise PreconditionError(f"tol_t must be positive, got {tol_t}")
    s_herd = params.s_herd
    psi0 = psi(params, init, 0.0, T, 0.0, dt)

    def gap(t0):
        s, _ = advance_state(params, init.s, init.i, 1.0, t0, dt)
        return s - s_herd / (1.0 - math.exp(params.nu * (t0 - T)))

    if T <= alpha_zero_threshold(params, init):
        s_inf = j_value(params, init, 0.0, T, 0.0, dt)
        return SwitchSolveReport(0.0, s_inf, psi0, ALPHA_ZERO, 0, 0.0)

    lo, hi = 0.0, T
    iterations = 0
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    t0 = 0.5 * (lo + hi)
    s_inf = j_value(params, init, 0.0, T, t0, dt)
    return SwitchSolveReport(t0, s_inf, psi0, ALPHA_ZERO, iterations, abs(gap(t0)))


def trisection_t0(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    dt: float = DEFAULT_DT,
    k: int = DEFAULT_TRISECTION_K,
    width_tol: float | None = None,
) -> SwitchSolveReport:
    """Minimize j_phi over [0, T] by repeatedly discarding a third of the interval.

    Runs ``k`` iterations, or stops earlier once the interval is narrower than
    ``width_tol`` when that is given.
    """
    _check_alpha(alpha, allow_zero=True)
    _check_switch(0.0, T)
    _check_epidemic(init)
    if k < 1:
        raise PreconditionError(f"k must be at least 1, got {k}")
    lo, hi = 0.0, T
    done = 0
    for _ in range(k):
        if width_tol is not None and hi - lo <= width_tol:
            break
        left = lo + (hi - lo) / 3.0
        right = lo + 2.0 * (hi - lo) / 3.0
        if j_phi(params, init, alpha, T, left, dt) >= j_phi(params, init, alpha, T, right, dt):
            lo = left
        else:
            hi = right
        done += 1
    t0 = 0.5 * (lo + hi)
    s_inf = j_value(params, init, alpha, T, t0, dt)
    psi0 = psi(params, init, alpha, T, 0.0, dt)
    return SwitchSolveReport(t0, s_inf, psi0, TRISECTION, done, hi - lo)


def solve_switch(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    dt: float = DEFAULT_DT,
    tol_t: float = DEFAULT_TOL_T,
) -> SwitchSolveReport:
    """Route to the psi-root solver, or the total-lockdown branch when alpha = 0."""
    if alpha == 0.0:
        return optimal_t0_alpha_zero(params, init, T, dt, tol_t)
    return optimal_t0(params, init, alpha, T, dt, tol_t)


def sensitivity_s_hat(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    t: float,
    dt: float = DEFAULT_DT,
) -> float:
    """Derivative of S(t) with respect to the switch time.

    For ``t > t0`` this is ``(alpha-1)*beta*S*I*(1 + nu*I(t0)*int_{t0}^t ds/I)``;
    at ``t == t0`` it is the derivative of S(t0) itself, ``-beta*S(t0)*I(t0)``.
    """
    _check_alpha(alpha, allow_zero=True)
    _check_switch(t0, T)
    if not t0 <= t <= T:
        raise PreconditionError(f"need t0 <= t <= T, got t={t}")
    w = _window(params, init, alpha, t0, t, dt)
    if t == t0:
        return -params.beta * w.s_t0 * w.i_t0
    # I(t) * (1 + nu*I(t0)*int 1/I) == I(t) + nu*I(t0)*M(t)
    return (alpha - 1.0) * params.beta * w.s_end * (w.i_end + params.nu * w.i_t0 * w.m_end)


def j_phi_closed_form(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    t0: float,
    dt: float = DEFAULT_DT,
) -> float:
    """``c0 + (nu/beta)(1/alpha - 1) ln(S(T)/S(t0))`` with c0 = phi(R0, S0, I0)."""
    _check_alpha(alpha, allow_zero=False)
    _check_switch(t0, T)
    s_t0, i_t0 = advance_state(params, init.s, init.i, 1.0, t0, dt)
    s_T, _ = advance_state(params, s_t0, i_t0, alpha, T - t0, dt)
    c0 = phi(params.r0, init.s, init.i)
    return c0 + params.nu / params.beta * (1.0 / alpha - 1.0) * math.log(s_T / s_t0)

