"""Compiled inner loops.

Everything here works on bare floats and float64 arrays so numba can compile
it in nopython mode. The public modules wrap these with validation.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sir_rhs(s, i, u, beta, nu):
    flux = u * beta * s * i
    return -flux, flux - nu * i


@njit(cache=True, nogil=True)
def rk4_sir(s, i, u, beta, nu, h):
    k1s, k1i = sir_rhs(s, i, u, beta, nu)
    k2s, k2i = sir_rhs(s + 0.5 * h * k1s, i + 0.5 * h * k1i, u, beta, nu)
    k3s, k3i = sir_rhs(s + 0.5 * h * k2s, i + 0.5 * h * k2i, u, beta, nu)
    k4s, k4i = sir_rhs(s + h * k3s, i + h * k3i, u, beta, nu)
    return (
        s + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
        i + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i),
    )


@njit(cache=True, nogil=True)
def rk4_sir_removed(s, i, r, u, beta, nu, h):
    """One step of the full three-compartment system."""
    k1s, k1i = sir_rhs(s, i, u, beta, nu)
    i2 = i + 0.5 * h * k1i
    k2s, k2i = sir_rhs(s + 0.5 * h * k1s, i2, u, beta, nu)
    i3 = i + 0.5 * h * k2i
    k3s, k3i = sir_rhs(s + 0.5 * h * k2s, i3, u, beta, nu)
    i4 = i + h * k3i
    k4s, k4i = sir_rhs(s + h * k3s, i4, u, beta, nu)
    w = h / 6.0
    return (
        s + w * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
        i + w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i),
        r + w * nu * (i + 2.0 * i2 + 2.0 * i3 + i4),
    )


@njit(cache=True, nogil=True)
def path_cells(s0, i0, r0, u_cells, beta, nu, dt):
    """Integrate with one constant control value per grid cell."""
    n = u_cells.shape[0]
    s = np.empty(n + 1)
    i = np.empty(n + 1)
    r = np.empty(n + 1)
    s[0] = s0
    i[0] = i0
    r[0] = r0
    for k in range(n):
        s[k + 1], i[k + 1], r[k + 1] = rk4_sir_removed(s[k], i[k], r[k], u_cells[k], beta, nu, dt)
    return s, i, r


@njit(cache=True, nogil=True)
def advance(s, i, u, beta, nu, duration, dt):
    """Full dt steps followed by one partial step covering the remainder.

    The result is continuous in ``duration``: when the remainder reaches dt
    the partial step coincides with a full one.
    """
    n = int(math.floor(duration / dt))
    for _ in range(n):
        s, i = rk4_sir(s, i, u, beta, nu, dt)
    rest = duration - n * dt
    if rest > 0.0:
        s, i = rk4_sir(s, i, u, beta, nu, rest)
    return s, i


@njit(cache=True, nogil=True)
def _quad_rhs(s, i, k, m, u, beta, nu):
    growth = u * beta * s - nu
    flux = u * beta * s * i
    # k = I(t) * int S/I, m = I(t) * int 1/I; both stay O(1) while I decays.
    return -flux, flux - nu * i, growth * k + s, growth * m + 1.0


@njit(cache=True, nogil=True)
def _rk4_quad(s, i, k, m, u, beta, nu, h):
    a1, b1, c1, d1 = _quad_rhs(s, i, k, m, u, beta, nu)
    a2, b2, c2, d2 = _quad_rhs(
        s + 0.5 * h * a1, i + 0.5 * h * b1, k + 0.5 * h * c1, m + 0.5 * h * d1, u, beta, nu
    )
    a3, b3, c3, d3 = _quad_rhs(
        s + 0.5 * h * a2, i + 0.5 * h * b2, k + 0.5 * h * c2, m + 0.5 * h * d2, u, beta, nu
    )
    a4, b4, c4, d4 = _quad_rhs(s + h * a3, i + h * b3, k + h * c3, m + h * d3, u, beta, nu)
    w = h / 6.0
    return (
        s + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        i + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        k + w * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
        m + w * (d1 + 2.0 * d2 + 2.0 * d3 + d4),
    )


@njit(cache=True, nogil=True)
def advance_quad(s, i, u, beta, nu, duration, dt):
    """Like ``advance`` but also carries the two scaled quadratures.

    Returns (S, I, K, M, min_I) at the end of the window, where
    K = I * int S/I ds and M = I * int 1/I ds over the window.
    """
    k = 0.0
    m = 0.0
    lowest = i
    n = int(math.floor(duration / dt))
    for _ in range(n):
        s, i, k, m = _rk4_quad(s, i, k, m, u, beta, nu, dt)
        if i < lowest:
            lowest = i
    rest = duration - n * dt
    if rest > 0.0:
        s, i, k, m = _rk4_quad(s, i, k, m, u, beta, nu, rest)
        if i < lowest:
            lowest = i
    return s, i, k, m, lowest


@njit(cache=True, nogil=True)
def _adjoint_rhs(ps, pi, s, i, u, beta, nu):
    dps = beta * u * i * (ps - pi)
    dpi = beta * u * s * ps - (beta * u * s - nu) * pi + nu * (u - 1.0)
    return dps, dpi


@njit(cache=True, nogil=True)
def adjoint_cells(s, i, u_cells, beta, nu, dt):
    """Backward RK4 for the costate from zero terminal data.

    State values at cell midpoints come from cubic Hermite interpolation of
    the stored nodes and their derivatives under the cell's control.
    """
    n = u_cells.shape[0]
    ps = np.zeros(n + 1)
    pi = np.zeros(n + 1)
    for c in range(n - 1, -1, -1):
        u = u_cells[c]
        sa, ia = s[c], i[c]
        sb, ib = s[c + 1], i[c + 1]
        fsa, fia = sir_rhs(sa, ia, u, beta, nu)
        fsb, fib = sir_rhs(sb, ib, u, beta, nu)
        sm = 0.5 * (sa + sb) + dt / 8.0 * (fsa - fsb)
        im = 0.5 * (ia + ib) + dt / 8.0 * (fia - fib)
        x, y = ps[c + 1], pi[c + 1]
        h = -dt
        a1, b1 = _adjoint_rhs(x, y, sb, ib, u, beta, nu)
        a2, b2 = _adjoint_rhs(x + 0.5 * h * a1, y + 0.5 * h * b1, sm, im, u, beta, nu)
        a3, b3 = _adjoint_rhs(x + 0.5 * h * a2, y + 0.5 * h * b2, sm, im, u, beta, nu)
        a4, b4 = _adjoint_rhs(x + h * a3, y + h * b3, sa, ia, u, beta, nu)
        ps[c] = x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        pi[c] = y + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return ps, pi


@njit(cache=True, nogil=True)
def cell_gradient(s, i, ps, pi, u_cells, beta, nu, dt):
    """Simpson integral of (nu - beta*S*(p_I - p_S))*I over each cell."""
    n = u_cells.shape[0]
    out = np.empty(n)
    for c in range(n):
        u = u_cells[c]
        sa, ia, sb, ib = s[c], i[c], s[c + 1], i[c + 1]
        fsa, fia = sir_rhs(sa, ia, u, beta, nu)
        fsb, fib = sir_rhs(sb, ib, u, beta, nu)
        sm = 0.5 * (sa + sb) + dt / 8.0 * (fsa - fsb)
        im = 0.5 * (ia + ib) + dt / 8.0 * (fia - fib)
        dpsa, dpia = _adjoint_rhs(ps[c], pi[c], sa, ia, u, beta, nu)
        dpsb, dpib = _adjoint_rhs(ps[c + 1], pi[c + 1], sb, ib, u, beta, nu)
        psm = 0.5 * (ps[c] + ps[c + 1]) + dt / 8.0 * (dpsa - dpsb)
        pim = 0.5 * (pi[c] + pi[c + 1]) + dt / 8.0 * (dpia - dpib)
        ga = (nu - beta * sa * (pi[c] - ps[c])) * ia
        gb = (nu - beta * sb * (pi[c + 1] - ps[c + 1])) * ib
        gm = (nu - beta * sm * (pim - psm)) * im
        out[c] = dt / 6.0 * (ga + 4.0 * gm + gb)
    return out
