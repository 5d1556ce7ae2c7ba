"""Pure-Python reference kernels.

These are the hot inner loops of the package: point-mass rollouts, the
finite-horizon Riccati solve, quadratic feature sums, and the longitudinal
driving-feature evaluation plus its finite-difference derivatives. The
compiled Cython backend (``_accel``) implements the same functions with the
same arithmetic, in the same order, so the two backends produce bit-identical
results; this module is the readable reference and the fallback when no C
toolchain is available.

Conventions shared by both backends:
  * the point-mass state is ``[position, velocity]`` and the action is a
    scalar acceleration: ``p' = p + dt*v``, ``v' = v + dt*u``;
  * a trajectory stores N states and N actions and every cost/feature sum
    runs over exactly those stored entries (no implied terminal term);
  * accumulations run left to right so both backends round identically.
"""

import math

import numpy as np

__all__ = [
    "pm_rollout",
    "lqr_pm_solve",
    "quad_feature_sums",
    "profile_from_s",
    "driving_features_from_s",
    "driving_features_of_actions",
    "driving_derivs",
    "driving_cost_grad",
]

# desired-velocity formula codes
FORMULA_CURVATURE_PRODUCT = 0  # v = sqrt(a_desire * kappa)
FORMULA_CURVATURE_INVERSE = 1  # v = min(sqrt(a_desire / max(kappa, 1e-6)), v_cap)

_KAPPA_FLOOR = 1e-6


def pm_rollout(x0, actions, dt):
    """Roll the point-mass model forward from ``x0`` under ``actions``.

    Returns an ``(n, 2)`` array of states; ``states[0] == x0``.
    """
    u = np.ascontiguousarray(actions, dtype=np.float64)
    n = u.shape[0]
    out = np.empty((n, 2), dtype=np.float64)
    p = float(x0[0])
    v = float(x0[1])
    for k in range(n):
        out[k, 0] = p
        out[k, 1] = v
        p = p + dt * v
        v = v + dt * u[k]
    return out

def lqr_pm_solve(q, r, horizon, dt, x0):
    """Finite-horizon point-mass regulator minimizing the stored-sum cost.

    The objective is ``sum_{i=0}^{N-1} (q*|x_i|^2 + r*u_i^2)`` over the N
    stored states/actions. The last action never enters the objective, so it
    is exactly 0; the remaining actions come from the discrete-time Riccati
    backward recursion with stage cost ``q*I`` terminating at stage N-1.

    Returns ``(states (N,2), actions (N,))``.
    """
    n = int(horizon)
    q = float(q)
    r = float(r)
    dt = float(dt)
    gains = np.zeros((n, 2), dtype=np.float64)
    # Backward pass: value x'Px with P at stage n-1 equal to q*I (the last
    # costed state); gains[n-1] stays zero.
    p00 = q
    p01 = 0.0
    p11 = q
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
    states = np.empty((n, 2), dtype=np.float64)
    actions = np.empty(n, dtype=np.float64)
    p = float(x0[0])
    v = float(x0[1])
    for k in range(n):
        states[k, 0] = p
        states[k, 1] = v
        u = -(gains[k, 0] * p + gains[k, 1] * v)
        actions[k] = u
        p = p + dt * v
        v = v + dt * u
    return states, actions

def quad_feature_sums(states, actions):
    """Return ``(sum_i |x_i|^2, sum_i u_i^2)`` accumulated left to right."""
    x = np.ascontiguousarray(states, dtype=np.float64)
    u = np.ascontiguousarray(actions, dtype=np.float64)
    f1 = 0.0
    f2 = 0.0
    for k in range(x.shape[0]):
        f1 = f1 + x[k, 0] * x[k, 0] + x[k, 1] * x[k, 1]
    uf = u.reshape(-1)
    for k in range(uf.shape[0]):
        f2 = f2 + uf[k] * uf[k]
    return f1, f2

def profile_from_s(s, dt):
    """Velocity/acceleration/jerk by central differences of ``s`` over ``dt``.

    One-sided first-order differences at both ends, applied at every
    derivative level; all three outputs have the same length as ``s``.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    n = s.shape[0]
    v = _central_diff(s, n, dt)
    a = _central_diff(v, n, dt)
    j = _central_diff(a, n, dt)
    return v, a, j


def _central_diff(y, n, dt):
    out = np.empty(n, dtype=np.float64)
    out[0] = (y[1] - y[0]) / dt
    for i in range(1, n - 1):
        out[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt)
    out[n - 1] = (y[n - 1] - y[n - 2]) / dt
    return out


def _interp_clamped(xq, xs, ys, m):
    """Linear interpolation with clamping outside the knot range."""
    if xq <= xs[0]:
        return ys[0]
    if xq >= xs[m - 1]:
        return ys[m - 1]
    lo = 0
    hi = m - 1
    # invariant: xs[lo] <= xq < xs[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= xq:
            lo = mid
        else:
            hi = mid
    t = (xq - xs[lo]) / (xs[lo + 1] - xs[lo])
    return ys[lo] + t * (ys[lo + 1] - ys[lo])


def _desired_velocity(kappa, a_desire, formula, v_cap):
    if formula == FORMULA_CURVATURE_PRODUCT:
        k = kappa if kappa >= 0.0 else -kappa
        return math.sqrt(a_desire * k)
    k = kappa if kappa > _KAPPA_FLOOR else _KAPPA_FLOOR
    vd = math.sqrt(a_desire / k)
    return vd if vd < v_cap else v_cap

def driving_features_from_s(s, dt, s_knots, kappa_knots, a_desire, formula, v_cap):
    """Longitudinal driving features of an arclength profile.

    ``f[0]`` is the mean squared gap between the differenced velocity and the
    curvature-derived desired velocity, ``f[1]`` the mean squared
    acceleration, ``f[2]`` the mean squared jerk. Means divide by the profile
    length. Arclengths outside the knot table clamp to its end values.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    xs = np.ascontiguousarray(s_knots, dtype=np.float64)
    ks = np.ascontiguousarray(kappa_knots, dtype=np.float64)
    n = s.shape[0]
    m = xs.shape[0]
    v, a, j = profile_from_s(s, dt)
    f1 = 0.0
    f2 = 0.0
    f3 = 0.0
    for i in range(n):
        kappa = _interp_clamped(s[i], xs, ks, m)
        vd = _desired_velocity(kappa, a_desire, formula, v_cap)
        dvi = v[i] - vd
        f1 = f1 + dvi * dvi
        f2 = f2 + a[i] * a[i]
        f3 = f3 + j[i] * j[i]
    out = np.empty(3, dtype=np.float64)
    out[0] = f1 / n
    out[1] = f2 / n
    out[2] = f3 / n
    return out

def driving_features_of_actions(x0, actions, dt, s_knots, kappa_knots, a_desire, formula, v_cap):
    """Roll out the point-mass model, then evaluate the driving features."""
    states = pm_rollout(x0, actions, dt)
    return driving_features_from_s(
        states[:, 0], dt, s_knots, kappa_knots, a_desire, formula, v_cap
    )

def driving_derivs(x0, actions, dt, s_knots, kappa_knots, a_desire, formula, v_cap, h):
    """Central-difference gradient and Hessian of each driving feature.

    Differentiates ``driving_features_of_actions`` with respect to the action
    sequence. Returns ``(f (3,), grads (3,n), hessians (3,n,n))``; the
    Hessians are exactly symmetric by construction.
    """
    u = np.array(actions, dtype=np.float64)
    n = u.shape[0]

    def feval(uv):
        return driving_features_of_actions(
            x0, uv, dt, s_knots, kappa_knots, a_desire, formula, v_cap
        )

    f0 = feval(u)
    fp = np.empty((n, 3), dtype=np.float64)
    fm = np.empty((n, 3), dtype=np.float64)
    grads = np.empty((3, n), dtype=np.float64)
    hess = np.empty((3, n, n), dtype=np.float64)
    for a_idx in range(n):
        ua = u[a_idx]
        u[a_idx] = ua + h
        fp[a_idx] = feval(u)
        u[a_idx] = ua - h
        fm[a_idx] = feval(u)
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
            fpp = feval(u)
            u[b_idx] = ub - h
            fpm = feval(u)
            u[a_idx] = ua - h
            fmm = feval(u)
            u[b_idx] = ub + h
            fmp = feval(u)
            u[a_idx] = ua
            u[b_idx] = ub
            for fi in range(3):
                val = (fpp[fi] - fpm[fi] - fmp[fi] + fmm[fi]) / (4.0 * h * h)
                hess[fi, a_idx, b_idx] = val
                hess[fi, b_idx, a_idx] = val
    return f0, grads, hess

def driving_cost_grad(x0, actions, dt, s_knots, kappa_knots, a_desire, formula, v_cap, theta, h):
    """Cost ``theta . f(u)`` and its central-difference gradient in ``u``."""
    u = np.array(actions, dtype=np.float64)
    th = np.ascontiguousarray(theta, dtype=np.float64)
    n = u.shape[0]

    def ceval(uv):
        f = driving_features_of_actions(
            x0, uv, dt, s_knots, kappa_knots, a_desire, formula, v_cap
        )
        return th[0] * f[0] + th[1] * f[1] + th[2] * f[2]

    cost = ceval(u)
    grad = np.empty(n, dtype=np.float64)
    for a_idx in range(n):
        ua = u[a_idx]
        u[a_idx] = ua + h
        cp = ceval(u)
        u[a_idx] = ua - h
        cm = ceval(u)
        u[a_idx] = ua
        grad[a_idx] = (cp - cm) / (2.0 * h)
    return cost, grad
