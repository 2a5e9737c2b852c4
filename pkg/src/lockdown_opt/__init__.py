"""Optimal lockdown timing for the SIR model with a contact-rate control."""

from .errors import (
    BracketError,
    DomainError,
    GridMismatchError,
    IntegrationError,
    LockdownOptError,
    PreconditionError,
    UnderflowError,
    UnreachableTargetError,
)
from .sir_core import (
    BangBangControl,
    EpidemicParams,
    EpidemicState,
    PiecewiseControl,
    Trajectory,
    alpha_bar,
    herd_threshold,
    integrate,
    phi,
    rk4_step,
    table2_params,
    table2_state,
)
from .sinf import s_infinity_constant_alpha, s_infinity_from_state, s_infinity_of_control
from .switching import (
    SwitchSolveReport,
    j_phi,
    j_value,
    optimal_t0,
    optimal_t0_alpha_zero,
    psi,
    psi_rescaled,
    solve_switch,
    trisection_t0,
)
from .adjoint import integrate_adjoint, projected_gradient
from .min_time import MinTimeReport, minimal_time

__version__ = "0.1.0"
