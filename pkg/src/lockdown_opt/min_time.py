"""Shortest intervention that stops the epidemic within epsilon of herd immunity.

The optimal value S*_inf(alpha, T) is nondecreasing in T, and the control
realizing the minimal time is the S_inf-optimal bang-bang control at that
horizon. So the minimal time is found by bisection on T.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PreconditionError, UnreachableTargetError
from .sinf import s_infinity_from_state
from .sir_core import DEFAULT_DT, EpidemicParams, EpidemicState, alpha_bar
from .switching import solve_switch

DEFAULT_TOL_T = 0.1
INITIAL_T_HI = 100.0
MAX_T = 1e4
INNER_TOL_T = 1e-6


@dataclass(frozen=True)
class MinTimeReport:
    t_star: float
    epsilon: float
    t0_star_at_t_star: float
    s_inf_achieved: float
    bracket_width: float


def optimal_value(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    T: float,
    dt: float = DEFAULT_DT,
    inner_tol_t: float = INNER_TOL_T,
) -> tuple[float, float]:
    """(t0*, S*_inf) for horizon T; T = 0 means no intervention at all."""
    if T == 0.0:
        return 0.0, s_infinity_from_state(params, init.s, init.i)
    report = solve_switch(params, init, alpha, T, dt, inner_tol_t)
    return report.t0_star, report.s_inf_star


def minimal_time(
    params: EpidemicParams,
    init: EpidemicState,
    alpha: float,
    epsilon: float,
    tol_T: float = DEFAULT_TOL_T,
    dt: float = DEFAULT_DT,
    inner_tol_t: float = INNER_TOL_T,
) -> MinTimeReport:
    s_herd = params.s_herd
    if not 0.0 < epsilon < s_herd:
        raise PreconditionError(f"epsilon must lie in (0, S_herd={s_herd}), got {epsilon}")
    if not 0.0 <= alpha < 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1), got {alpha}")
    if not tol_T > 0:
        raise PreconditionError(f"tol_T must be positive, got {tol_T}")
    bound = alpha_bar(params, init)
    if alpha > bound:
        raise UnreachableTargetError(
            f"alpha={alpha} exceeds alpha_bar={bound:.6g}: even an endless lockdown at this "
            "level stops below herd immunity by a fixed margin"
        )
    target = s_herd - epsilon

    def value(T):
        return optimal_value(params, init, alpha, T, dt, inner_tol_t)

    t0_lo, s_lo = value(0.0)
    if s_lo >= target:
        return MinTimeReport(0.0, epsilon, t0_lo, s_lo, 0.0)

    lo, hi = 0.0, INITIAL_T_HI
    t0_hi, s_hi = value(hi)
    while s_hi < target:
        if hi >= MAX_T:
            raise UnreachableTargetError(
                f"S_herd - epsilon = {target:.6g} not reached for horizons up to {MAX_T:g} days"
            )
        lo, hi = hi, min(2.0 * hi, MAX_T)
        t0_hi, s_hi = value(hi)

    while hi - lo > tol_T:
        mid = 0.5 * (lo + hi)
        t0_mid, s_mid = value(mid)
        if s_mid >= target:
            hi, t0_hi, s_hi = mid, t0_mid, s_mid
        else:
            lo = mid
    return MinTimeReport(hi, epsilon, t0_hi, s_hi, hi - lo)
