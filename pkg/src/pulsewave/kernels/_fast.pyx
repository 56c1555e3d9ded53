# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel implementations: cyclic Thomas solves and fused IMEX steps."""

import numpy as np


cdef void _solve_core(const double[::1] lo, const double[::1] inv_den,
                      const double[::1] cp, const double[::1] b,
                      double[::1] x) noexcept nogil:
    cdef Py_ssize_t n = inv_den.shape[0]
    cdef Py_ssize_t i
    x[0] = b[0] * inv_den[0]
    for i in range(1, n):
        x[i] = (b[i] - lo[i] * x[i - 1]) * inv_den[i]
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]


def tridiag_factor(lower, diag, upper, bint periodic):
    """Thomas factorization with a rank-one cyclic correction.

    Returns a tuple consumed by tridiag_solve; the cyclic corners are folded
    into a dominance-increasing rank-one update (Sherman-Morrison).
    """
    lo = np.ascontiguousarray(lower, dtype=np.float64)
    dg = np.array(diag, dtype=np.float64, copy=True)
    up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = dg.shape[0]
    cdef double sigma = 0.0, cl = 0.0, cu = 0.0, v_last = 0.0, sm_denom = 1.0
    if periodic:
        cl = lo[0]
        cu = up[n - 1]
        sigma = -max(1.0, abs(dg[0]))
        dg[0] -= sigma
        dg[n - 1] -= cu * cl / sigma
        v_last = cl / sigma
    inv_den = np.empty(n, dtype=np.float64)
    cp = np.zeros(n, dtype=np.float64)
    cdef double[::1] lo_v = lo
    cdef double[::1] dg_v = dg
    cdef double[::1] up_v = up
    cdef double[::1] inv_den_v = inv_den
    cdef double[::1] cp_v = cp
    cdef Py_ssize_t i
    cdef double den = dg_v[0]
    inv_den_v[0] = 1.0 / den
    cp_v[0] = up_v[0] * inv_den_v[0]
    for i in range(1, n):
        den = dg_v[i] - lo_v[i] * cp_v[i - 1]
        inv_den_v[i] = 1.0 / den
        if i < n - 1:
            cp_v[i] = up_v[i] * inv_den_v[i]
    z = np.zeros(n, dtype=np.float64)
    if periodic:
        u_vec = np.zeros(n, dtype=np.float64)
        u_vec[0] = sigma
        u_vec[n - 1] = cu
        _solve_core(lo_v, inv_den_v, cp_v, u_vec, z)
        sm_denom = 1.0 + z[0] + v_last * z[n - 1]
    return ("fast", lo, inv_den, cp, z, v_last, sm_denom, periodic)


def tridiag_solve(factor, rhs):
    b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef double[::1] lo = factor[1]
    cdef double[::1] inv_den = factor[2]
    cdef double[::1] cp = factor[3]
    cdef double[::1] z = factor[4]
    cdef double v_last = factor[5]
    cdef double sm_denom = factor[6]
    cdef bint periodic = factor[7]
    cdef Py_ssize_t n = b.shape[0]
    x = np.empty(n, dtype=np.float64)
    cdef double[::1] x_v = x
    cdef double[::1] b_v = b
    cdef double corr
    cdef Py_ssize_t i
    with nogil:
        _solve_core(lo, inv_den, cp, b_v, x_v)
        if periodic:
            corr = (x_v[0] + v_last * x_v[n - 1]) / sm_denom
            for i in range(n):
                x_v[i] -= corr * z[i]
    return x


def tridiag_matvec(lower, diag, upper, x, bint periodic):
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = dg.shape[0]
    y = np.empty(n, dtype=np.float64)
    cdef double[::1] y_v = y
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            y_v[i] = dg[i] * v[i]
        for i in range(1, n):
            y_v[i] += lo[i] * v[i - 1]
        for i in range(n - 1):
            y_v[i] += up[i] * v[i + 1]
        if periodic:
            y_v[0] += lo[0] * v[n - 1]
            y_v[n - 1] += up[n - 1] * v[0]
    return y


def logistic_twin_run(u, delta, mu, factor, double dt, Py_ssize_t n_steps, affine=None):
    """Advance a reference field and its perturbation difference together.

    The difference uses the exact identity f(u+d) - f(u) = d*(mu - 2u - d),
    avoiding the cancellation floor of subtracting two O(1) twins.
    """
    uu = np.array(u, dtype=np.float64, copy=True)
    dd = np.array(delta, dtype=np.float64, copy=True)
    cdef double[::1] u_v = uu
    cdef double[::1] d_v = dd
    cdef double[::1] mm = np.ascontiguousarray(mu, dtype=np.float64)
    cdef double[::1] lo = factor[1]
    cdef double[::1] inv_den = factor[2]
    cdef double[::1] cp = factor[3]
    cdef double[::1] z = factor[4]
    cdef double v_last = factor[5]
    cdef double sm_denom = factor[6]
    cdef bint periodic = factor[7]
    cdef Py_ssize_t n = u_v.shape[0]
    cdef double[::1] rhs = np.empty(n, dtype=np.float64)
    cdef double[::1] rhs_d = np.empty(n, dtype=np.float64)
    cdef bint has_aff = affine is not None
    cdef double[::1] aff = (
        np.ascontiguousarray(affine, dtype=np.float64) if has_aff else np.zeros(0)
    )
    cdef Py_ssize_t step, i
    cdef double corr
    with nogil:
        for step in range(n_steps):
            for i in range(n):
                rhs_d[i] = d_v[i] + dt * d_v[i] * (mm[i] - 2.0 * u_v[i] - d_v[i])
                rhs[i] = u_v[i] + dt * u_v[i] * (mm[i] - u_v[i])
            if has_aff:
                for i in range(n):
                    rhs[i] += dt * aff[i]
            _solve_core(lo, inv_den, cp, rhs, u_v)
            _solve_core(lo, inv_den, cp, rhs_d, d_v)
            if periodic:
                corr = (u_v[0] + v_last * u_v[n - 1]) / sm_denom
                for i in range(n):
                    u_v[i] -= corr * z[i]
                corr = (d_v[0] + v_last * d_v[n - 1]) / sm_denom
                for i in range(n):
                    d_v[i] -= corr * z[i]
    return uu, dd


def logistic_imex_run(u, mu, factor, double dt, Py_ssize_t n_steps, affine=None):
    """Advance (I - dt*D) u_new = u + dt*u*(mu - u) [+ dt*affine] n_steps times."""
    uu = np.array(u, dtype=np.float64, copy=True)
    cdef double[::1] u_v = uu
    cdef double[::1] mm = np.ascontiguousarray(mu, dtype=np.float64)
    cdef double[::1] lo = factor[1]
    cdef double[::1] inv_den = factor[2]
    cdef double[::1] cp = factor[3]
    cdef double[::1] z = factor[4]
    cdef double v_last = factor[5]
    cdef double sm_denom = factor[6]
    cdef bint periodic = factor[7]
    cdef Py_ssize_t n = u_v.shape[0]
    cdef double[::1] rhs = np.empty(n, dtype=np.float64)
    cdef bint has_aff = affine is not None
    cdef double[::1] aff = (
        np.ascontiguousarray(affine, dtype=np.float64) if has_aff else np.zeros(0)
    )
    cdef Py_ssize_t step, i
    cdef double corr
    with nogil:
        for step in range(n_steps):
            if has_aff:
                for i in range(n):
                    rhs[i] = u_v[i] + dt * (u_v[i] * (mm[i] - u_v[i]) + aff[i])
            else:
                for i in range(n):
                    rhs[i] = u_v[i] + dt * u_v[i] * (mm[i] - u_v[i])
            _solve_core(lo, inv_den, cp, rhs, u_v)
            if periodic:
                corr = (u_v[0] + v_last * u_v[n - 1]) / sm_denom
                for i in range(n):
                    u_v[i] -= corr * z[i]
    return uu
