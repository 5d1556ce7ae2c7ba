# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernels.

Mirror of ``styleirl._kernels.pure``: same functions, same arithmetic in the
same order (the build disables FP contraction), so results are bit-identical
to the pure backend. Keep the two files in sync.
"""

from libc.math cimport sqrt

import numpy as np

cimport cython

FORMULA_CURVATURE_PRODUCT = 0
FORMULA_CURVATURE_INVERSE = 1

cdef double _KAPPA_FLOOR = 1e-6


def pm_rollout(x0, actions, double dt):
    """Roll the point-mass model forward from ``x0`` under ``actions``."""
    cdef const double[::1] u = np.ascontiguousarray(actions, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    out_arr = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double p = x0[0]
    cdef double v = x0[1]
    cdef Py_ssize_t k
    for k in range(n):
        out[k, 0] = p
        out[k, 1] = v
        p = p + dt * v
        v = v + dt * u[k]
    return out_arr


def lqr_pm_solve(double q, double r, Py_ssize_t horizon, double dt, x0):
    """Finite-horizon point-mass regulator; see the pure backend docstring."""
    cdef Py_ssize_t n = horizon
    gains_arr = np.zeros((n, 2), dtype=np.float64)
    cdef double[:, ::1] gains = gains_arr
    cdef double p00 = q, p01 = 0.0, p11 = q
    cdef double c, denom, k0, k1, n00, n01, n11
    cdef Py_ssize_t k
    for k in range(n - 2, -1, -1):
        c = p01 * dt + p11
        denom = r + dt * dt * p11
        k0 = dt * p01 / denom
        k1 = dt * c / denom
        gains[k, 0] = k0
        gains[k, 1] = k1
        n00 = q + p00 - (dt * p01) * k0
        n01 = p00 * dt + p01 - (dt * p01) * k1
        n11 = q + p00 * dt * dt + 2.0 * p01 * dt + p11 - (dt * c) * k1
        p00 = n00
        p01 = n01
        p11 = n11
    states_arr = np.empty((n, 2), dtype=np.float64)
    actions_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] states = states_arr
    cdef double[::1] actions = actions_arr
    cdef double p = x0[0]
    cdef double v = x0[1]
    cdef double u
    for k in range(n):
        states[k, 0] = p
        states[k, 1] = v
        u = -(gains[k, 0] * p + gains[k, 1] * v)
        actions[k] = u
        p = p + dt * v
        v = v + dt * u
    return states_arr, actions_arr


def quad_feature_sums(states, actions):
    """Return ``(sum_i |x_i|^2, sum_i u_i^2)`` accumulated left to right."""
    cdef const double[:, ::1] x = np.ascontiguousarray(states, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(actions, dtype=np.float64).reshape(-1)
    cdef double f1 = 0.0, f2 = 0.0
    cdef Py_ssize_t k
    for k in range(x.shape[0]):
        f1 = f1 + x[k, 0] * x[k, 0] + x[k, 1] * x[k, 1]
    for k in range(u.shape[0]):
        f2 = f2 + u[k] * u[k]
    return f1, f2


cdef void _central_diff(const double[::1] y, Py_ssize_t n, double dt, double[::1] out) noexcept:
    cdef Py_ssize_t i
    out[0] = (y[1] - y[0]) / dt
    for i in range(1, n - 1):
        out[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt)
    out[n - 1] = (y[n - 1] - y[n - 2]) / dt


def profile_from_s(s, double dt):
    """Velocity/acceleration/jerk by central differences of ``s`` over ``dt``."""
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t n = sv.shape[0]
    v_arr = np.empty(n, dtype=np.float64)
    a_arr = np.empty(n, dtype=np.float64)
    j_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double[::1] a = a_arr
    cdef double[::1] j = j_arr
    _central_diff(sv, n, dt, v)
    _central_diff(v, n, dt, a)
    _central_diff(a, n, dt, j)
    return v_arr, a_arr, j_arr


cdef double _interp_clamped(double xq, const double[::1] xs, const double[::1] ys, Py_ssize_t m) noexcept:
    cdef Py_ssize_t lo, hi, mid
    cdef double t
    if xq <= xs[0]:
        return ys[0]
    if xq >= xs[m - 1]:
        return ys[m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= xq:
            lo = mid
        else:
            hi = mid
    t = (xq - xs[lo]) / (xs[lo + 1] - xs[lo])
    return ys[lo] + t * (ys[lo + 1] - ys[lo])


cdef double _desired_velocity(double kappa, double a_desire, int formula, double v_cap) noexcept:
    cdef double k, vd
    if formula == 0:
        k = kappa if kappa >= 0.0 else -kappa
        return sqrt(a_desire * k)
    k = kappa if kappa > _KAPPA_FLOOR else _KAPPA_FLOOR
    vd = sqrt(a_desire / k)
    return vd if vd < v_cap else v_cap


cdef void _features_from_s(
    const double[::1] s, Py_ssize_t n, double dt,
    const double[::1] xs, const double[::1] ks, Py_ssize_t m,
    double a_desire, int formula, double v_cap,
    double[::1] v, double[::1] a, double[::1] j, double* fout,
) noexcept:
    cdef double f1 = 0.0, f2 = 0.0, f3 = 0.0
    cdef double kappa, vd, dvi
    cdef Py_ssize_t i
    _central_diff(s, n, dt, v)
    _central_diff(v, n, dt, a)
    _central_diff(a, n, dt, j)
    for i in range(n):
        kappa = _interp_clamped(s[i], xs, ks, m)
        vd = _desired_velocity(kappa, a_desire, formula, v_cap)
        dvi = v[i] - vd
        f1 = f1 + dvi * dvi
        f2 = f2 + a[i] * a[i]
        f3 = f3 + j[i] * j[i]
    fout[0] = f1 / n
    fout[1] = f2 / n
    fout[2] = f3 / n


def driving_features_from_s(s, double dt, s_knots, kappa_knots,
                            double a_desire, int formula, double v_cap):
    """Longitudinal driving features of an arclength profile."""
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(s_knots, dtype=np.float64)
    cdef const double[::1] ks = np.ascontiguousarray(kappa_knots, dtype=np.float64)
    cdef Py_ssize_t n = sv.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    scratch = np.empty((3, n), dtype=np.float64)
    cdef double[:, ::1] sc = scratch
    cdef double fout[3]
    _features_from_s(sv, n, dt, xs, ks, m, a_desire, formula, v_cap,
                     sc[0], sc[1], sc[2], fout)
    out = np.empty(3, dtype=np.float64)
    out[0] = fout[0]
    out[1] = fout[1]
    out[2] = fout[2]
    return out


cdef void _rollout_s(double p0, double v0, const double[::1] u, Py_ssize_t n,
                     double dt, double[::1] s) noexcept:
    cdef double p = p0, v = v0
    cdef Py_ssize_t k
    for k in range(n):
        s[k] = p
        p = p + dt * v
        v = v + dt * u[k]


def driving_features_of_actions(x0, actions, double dt, s_knots, kappa_knots,
                                double a_desire, int formula, double v_cap):
    """Roll out the point-mass model, then evaluate the driving features."""
    cdef const double[::1] u = np.ascontiguousarray(actions, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(s_knots, dtype=np.float64)
    cdef const double[::1] ks = np.ascontiguousarray(kappa_knots, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    cdef double p0 = x0[0]
    cdef double v0 = x0[1]
    scratch = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] sc = scratch
    cdef double fout[3]
    _rollout_s(p0, v0, u, n, dt, sc[3])
    _features_from_s(sc[3], n, dt, xs, ks, m, a_desire, formula, v_cap,
                     sc[0], sc[1], sc[2], fout)
    out = np.empty(3, dtype=np.float64)
    out[0] = fout[0]
    out[1] = fout[1]
    out[2] = fout[2]
    return out


cdef void _feat_of_u(double p0, double v0, const double[::1] u, Py_ssize_t n, double dt,
                     const double[::1] xs, const double[::1] ks, Py_ssize_t m,
                     double a_desire, int formula, double v_cap,
                     double[:, ::1] sc, double* fout) noexcept:
    _rollout_s(p0, v0, u, n, dt, sc[3])
    _features_from_s(sc[3], n, dt, xs, ks, m, a_desire, formula, v_cap,
                     sc[0], sc[1], sc[2], fout)


def driving_derivs(x0, actions, double dt, s_knots, kappa_knots,
                   double a_desire, int formula, double v_cap, double h):
    """Central-difference gradient and Hessian of each driving feature."""
    u_arr = np.array(actions, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef const double[::1] xs = np.ascontiguousarray(s_knots, dtype=np.float64)
    cdef const double[::1] ks = np.ascontiguousarray(kappa_knots, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    cdef double p0 = x0[0]
    cdef double v0 = x0[1]
    scratch = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] sc = scratch

    f0_arr = np.empty(3, dtype=np.float64)
    fp_arr = np.empty((n, 3), dtype=np.float64)
    fm_arr = np.empty((n, 3), dtype=np.float64)
    grads_arr = np.empty((3, n), dtype=np.float64)
    hess_arr = np.empty((3, n, n), dtype=np.float64)
    cdef double[::1] f0 = f0_arr
    cdef double[:, ::1] fp = fp_arr
    cdef double[:, ::1] fm = fm_arr
    cdef double[:, ::1] grads = grads_arr
    cdef double[:, :, ::1] hess = hess_arr

    cdef double fbuf[3]
    cdef double fpp[3]
    cdef double fpm[3]
    cdef double fmp[3]
    cdef double fmm[3]
    cdef double ua, ub, val
    cdef Py_ssize_t a_idx, b_idx, fi

    _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
    for fi in range(3):
        f0[fi] = fbuf[fi]
    for a_idx in range(n):
        ua = u[a_idx]
        u[a_idx] = ua + h
        _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
        for fi in range(3):
            fp[a_idx, fi] = fbuf[fi]
        u[a_idx] = ua - h
        _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
        for fi in range(3):
            fm[a_idx, fi] = fbuf[fi]
        u[a_idx] = ua
    for a_idx in range(n):
        for fi in range(3):
            grads[fi, a_idx] = (fp[a_idx, fi] - fm[a_idx, fi]) / (2.0 * h)
            hess[fi, a_idx, a_idx] = (fp[a_idx, fi] - 2.0 * f0[fi] + fm[a_idx, fi]) / (h * h)
    for a_idx in range(n):
        ua = u[a_idx]
        for b_idx in range(a_idx + 1, n):
            ub = u[b_idx]
            u[a_idx] = ua + h
            u[b_idx] = ub + h
            _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fpp)
            u[b_idx] = ub - h
            _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fpm)
            u[a_idx] = ua - h
            _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fmm)
            u[b_idx] = ub + h
            _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fmp)
            u[a_idx] = ua
            u[b_idx] = ub
            for fi in range(3):
                val = (fpp[fi] - fpm[fi] - fmp[fi] + fmm[fi]) / (4.0 * h * h)
                hess[fi, a_idx, b_idx] = val
                hess[fi, b_idx, a_idx] = val
    return f0_arr, grads_arr, hess_arr


def driving_cost_grad(x0, actions, double dt, s_knots, kappa_knots,
                      double a_desire, int formula, double v_cap, theta, double h):
    """Cost ``theta . f(u)`` and its central-difference gradient in ``u``."""
    u_arr = np.array(actions, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef const double[::1] xs = np.ascontiguousarray(s_knots, dtype=np.float64)
    cdef const double[::1] ks = np.ascontiguousarray(kappa_knots, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    cdef double p0 = x0[0]
    cdef double v0 = x0[1]
    scratch = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] sc = scratch
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double fbuf[3]
    cdef double cost, cp, cm, ua
    cdef Py_ssize_t a_idx

    _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
    cost = th[0] * fbuf[0] + th[1] * fbuf[1] + th[2] * fbuf[2]
    for a_idx in range(n):
        ua = u[a_idx]
        u[a_idx] = ua + h
        _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
        cp = th[0] * fbuf[0] + th[1] * fbuf[1] + th[2] * fbuf[2]
        u[a_idx] = ua - h
        _feat_of_u(p0, v0, u, n, dt, xs, ks, m, a_desire, formula, v_cap, sc, fbuf)
        cm = th[0] * fbuf[0] + th[1] * fbuf[1] + th[2] * fbuf[2]
        u[a_idx] = ua
        grad[a_idx] = (cp - cm) / (2.0 * h)
    return cost, grad_arr
