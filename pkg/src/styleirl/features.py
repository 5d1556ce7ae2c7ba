"""Trajectory feature maps.

Two feature sets map a trajectory to the fixed-dimension vector that cost
weights multiply:

* ``LqrQuadraticFeatures`` — ``[sum_i |x_i|^2, sum_i u_i^2]`` over the stored
  states/actions of a point-mass trajectory, so ``theta . f`` reproduces the
  quadratic regulator objective with ``theta`` proportional to ``(q, r)``.
* ``DrivingLongitudinalFeatures`` — mean squared desired-velocity gap, mean
  squared acceleration, and mean squared jerk of the longitudinal (arclength)
  profile, with the desired velocity derived from reference-path curvature.

The driving pipeline also needs path-frame geometry: projecting Cartesian
points onto a polyline reference path (arclength s, signed lateral offset d),
a curvature table built from circumscribed circles over waypoint triples, and
velocity/acceleration/jerk profiles by central differences.
"""

from __future__ import annotations

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from ._kernels import pure as _pure
from .core import Trajectory
from .dynamics import DynamicsModel
from .errors import DimensionMismatchError, ValidationError

_FORMULAS = {
    "curvature-product": _kernels.FORMULA_CURVATURE_PRODUCT,
    "curvature-inverse": _kernels.FORMULA_CURVATURE_INVERSE,
}


@dataclass(frozen=True)
class FeatureConfig:
    """Driving-feature hyperparameters.

    ``desired_velocity_formula`` selects how curvature maps to the desired
    velocity: ``curvature-product`` uses v = sqrt(a_desire * kappa);
    ``curvature-inverse`` uses the conventional curve-speed rule
    v = min(sqrt(a_desire / max(kappa, 1e-6)), v_cap).
    """

    a_desire: float = 1.8
    desired_velocity_formula: str = "curvature-product"
    v_cap: float = 15.0

    def __post_init__(self):
        if not self.a_desire > 0.0:
            raise ValidationError(f"a_desire must be positive, got {self.a_desire}")
        if not self.v_cap > 0.0:
            raise ValidationError(f"v_cap must be positive, got {self.v_cap}")
        if self.desired_velocity_formula not in _FORMULAS:
            raise ValidationError(
                f"unknown desired_velocity_formula {self.desired_velocity_formula!r}; "
                f"expected one of {sorted(_FORMULAS)}"
            )

    @property
    def formula_code(self) -> int:
        return _FORMULAS[self.desired_velocity_formula]


class ReferencePath:
    """Polyline reference path with precomputed arclength and curvature tables.

    Curvature at interior waypoints is the (unsigned) inverse radius of the
    circle through each consecutive waypoint triple; the end waypoints copy
    their neighbors. Queries interpolate the table linearly over arclength.
    """

    def __init__(self, waypoints):
        wp = np.array(waypoints, dtype=np.float64)
        if wp.ndim != 2 or wp.shape[1] != 2:
            raise ValidationError(f"waypoints must be an (m, 2) array, got shape {wp.shape}")
        if len(wp) < 3:
            raise ValidationError(f"a reference path needs at least 3 waypoints, got {len(wp)}")
        if not np.all(np.isfinite(wp)):
            raise ValidationError("waypoints contain non-finite entries")
        seg = np.diff(wp, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ValidationError("consecutive waypoints must be distinct (arclength must increase)")
        s = np.concatenate([[0.0], np.cumsum(seg_len)])
        kappa = np.zeros(len(wp))
        for i in range(1, len(wp) - 1):
            kappa[i] = _circumscribed_curvature(wp[i - 1], wp[i], wp[i + 1])
        kappa[0] = kappa[1]
        kappa[-1] = kappa[-2]
        for arr in (wp, s, kappa, seg, seg_len):
            arr.setflags(write=False)
        self.waypoints = wp
        self.arclengths = s
        self.curvatures = kappa
        self._segments = seg
        self._segment_lengths = seg_len

    @property
    def total_length(self) -> float:
        return float(self.arclengths[-1])


def _circumscribed_curvature(a, b, c) -> float:
    ab = b - a
    cb = c - b
    ca = c - a
    denom = np.hypot(*ab) * np.hypot(*cb) * np.hypot(*ca)
    if denom < 1e-12:
        return 0.0
    area2 = ab[0] * ca[1] - ab[1] * ca[0]
    return float(2.0 * abs(area2) / denom)


def curvature_at(path: ReferencePath, s: float) -> float:
    """Curvature at arclength ``s``; out-of-range queries clamp with a warning."""
    if s < 0.0 or s > path.total_length:
        warnings.warn(
            f"arclength {s:.6g} outside [0, {path.total_length:.6g}]; clamping",
            stacklevel=2,
        )
    return _pure._interp_clamped(
        float(s), path.arclengths, path.curvatures, len(path.arclengths)
    )


def desired_velocity(kappa: float, config: FeatureConfig) -> float:
    """Desired velocity for a path curvature, per the configured formula."""
    if kappa < 0.0:
        warnings.warn(f"negative curvature {kappa:.6g}; using its absolute value", stacklevel=2)
        kappa = -kappa
    return _pure._desired_velocity(float(kappa), config.a_desire, config.formula_code, config.v_cap)


@dataclass(frozen=True)
class SdTrajectory:
    """Path-frame trajectory: travelled arclength s and lateral offset d per step."""

    s: np.ndarray
    d: np.ndarray
    dt: float

    def __post_init__(self):
        s = np.array(self.s, dtype=np.float64).reshape(-1)
        d = np.array(self.d, dtype=np.float64).reshape(-1)
        if len(s) != len(d):
            raise ValidationError(f"s and d must have equal length, got {len(s)} vs {len(d)}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(d))):
            raise ValidationError("path-frame trajectory contains non-finite entries")
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if len(s) > 1 and np.any(np.diff(s) < -1e-6):
            raise ValidationError("arclength must be non-decreasing along the trajectory")
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class KinematicProfile:
    """Longitudinal velocity/acceleration/jerk, one value per trajectory step."""

    v: np.ndarray
    a: np.ndarray
    j: np.ndarray


def frenet_project(
    path: ReferencePath, xy, dt: float, corridor: float = 10.0
) -> SdTrajectory:
    """Project Cartesian points onto the path: s along it, d signed lateral.

    d is positive to the left of the direction of travel. Points farther than
    ``corridor`` meters from the path raise a ValidationError naming the
    offending index.
    """
    pts = np.asarray(xy, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError(f"xy must be an (n, 2) array, got shape {pts.shape}")
    a = path.waypoints[:-1]
    seg = path._segments
    seg_len = path._segment_lengths
    s_out = np.empty(len(pts))
    d_out = np.empty(len(pts))
    for i, p in enumerate(pts):
        rel = p - a
        t = np.clip((rel[:, 0] * seg[:, 0] + rel[:, 1] * seg[:, 1]) / seg_len**2, 0.0, 1.0)
        proj = a + t[:, None] * seg
        dist2 = np.sum((p - proj) ** 2, axis=1)
        k = int(np.argmin(dist2))
        dist = float(np.sqrt(dist2[k]))
        if dist > corridor:
            raise ValidationError(
                f"point {i} is {dist:.3f} m from the reference path (corridor {corridor} m)"
            )
        s_out[i] = path.arclengths[k] + t[k] * seg_len[k]
        cross = seg[k, 0] * (p[1] - a[k, 1]) - seg[k, 1] * (p[0] - a[k, 0])
        d_out[i] = np.copysign(dist, cross) if dist > 0.0 else 0.0
    return SdTrajectory(s_out, d_out, dt)


def frenet_reconstruct(path: ReferencePath, sd: SdTrajectory) -> np.ndarray:
    """Map path-frame (s, d) samples back to Cartesian points."""
    out = np.empty((len(sd), 2))
    seg = path._segments
    seg_len = path._segment_lengths
    s_table = path.arclengths
    for i in range(len(sd)):
        s = min(max(float(sd.s[i]), 0.0), path.total_length)
        k = int(np.searchsorted(s_table, s, side="right")) - 1
        k = min(max(k, 0), len(seg) - 1)
        t = (s - s_table[k]) / seg_len[k]
        tangent = seg[k] / seg_len[k]
        normal = np.array([-tangent[1], tangent[0]])
        out[i] = path.waypoints[k] + t * seg[k] + sd.d[i] * normal
    return out


def kinematic_profile(sd: SdTrajectory) -> KinematicProfile:
    """Differentiate the arclength profile; needs at least 4 samples for jerk."""
    if len(sd) < 4:
        raise ValidationError(f"kinematic profile needs >= 4 samples, got {len(sd)}")
    v, a, j = _kernels.profile_from_s(sd.s, sd.dt)
    return KinematicProfile(v, a, j)


def driving_features(sd: SdTrajectory, path: ReferencePath, config: FeatureConfig) -> np.ndarray:
    """Three longitudinal features of a path-frame trajectory.

    ``[mean (v - v_desired)^2, mean a^2, mean j^2]`` with v_desired evaluated
    from the path curvature at each step's arclength.
    """
    if len(sd) < 4:
        raise ValidationError(f"driving features need >= 4 samples, got {len(sd)}")
    return _kernels.driving_features_from_s(
        sd.s,
        sd.dt,
        path.arclengths,
        path.curvatures,
        config.a_desire,
        config.formula_code,
        config.v_cap,
    )


def sd_to_trajectory(sd: SdTrajectory) -> Trajectory:
    """Reconstruct a point-mass trajectory (states [s, v], action accel) from s.

    Velocities and accelerations come from forward differences, so the result
    satisfies the point-mass dynamics exactly; the last two samples of the
    profile are consumed by the differencing.
    """
    if len(sd) < 4:
        raise ValidationError(f"need >= 4 samples to reconstruct a trajectory, got {len(sd)}")
    s = sd.s
    v = np.diff(s) / sd.dt
    u = np.diff(v) / sd.dt
    n = len(s) - 2
    states = np.column_stack([s[:n], v[:n]])
    return Trajectory(states, u[:n].reshape(-1, 1), sd.dt)


class FeatureSet(ABC):
    """Maps trajectories (and action sequences) to feature vectors.

    ``features_of_actions`` and the derivative hooks parameterize a trajectory
    by its action sequence with states reconstructed by rollout from x0; that
    parameterization is what the IRL likelihood and the MPC optimizer
    differentiate. Feature sets with closed-form derivatives override the
    hooks; the base class falls back to central finite differences.
    """

    dimension: int
    min_length: int = 1
    kind: str = "custom"
    # True iff the action Hessian of every feature depends only on (n, dt),
    # never on the demo itself; lets the IRL fit share one Hessian per shape.
    shared_hessians: bool = False

    @abstractmethod
    def features(self, traj: Trajectory) -> np.ndarray:
        """Feature vector of a trajectory."""

    def check_trajectory(self, traj: Trajectory) -> None:
        if traj.n_steps < self.min_length:
            raise ValidationError(
                f"{type(self).__name__} needs trajectories of length >= {self.min_length}, "
                f"got {traj.n_steps}"
            )

    def features_of_actions(self, model: DynamicsModel, x0, actions) -> np.ndarray:
        traj = model.rollout(x0, np.asarray(actions, dtype=np.float64).reshape(-1, model.action_dim))
        return self.features(traj)

    def cost_and_grad(self, model, x0, actions, theta: np.ndarray, fd_step: float):
        """``theta . f(u)`` and its gradient in the action sequence."""
        u = np.asarray(actions, dtype=np.float64).reshape(-1)
        cost = float(theta @ self.features_of_actions(model, x0, u))
        grad = np.empty(len(u))
        for i in range(len(u)):
            up = u.copy()
            um = u.copy()
            up[i] += fd_step
            um[i] -= fd_step
            cp = float(theta @ self.features_of_actions(model, x0, up))
            cm = float(theta @ self.features_of_actions(model, x0, um))
            grad[i] = (cp - cm) / (2.0 * fd_step)
        return cost, grad

    def action_derivatives(self, model, x0, actions, fd_step: float):
        """Per-feature value, gradient, and Hessian in the action sequence.

        Returns ``(f (F,), grads (F, n), hessians (F, n, n))``.
        """
        u = np.asarray(actions, dtype=np.float64).reshape(-1)
        n = len(u)
        F = self.dimension
        h = fd_step

        def feval(uv):
            return self.features_of_actions(model, x0, uv)

        f0 = feval(u)
        fp = np.empty((n, F))
        fm = np.empty((n, F))
        for i in range(n):
            up = u.copy()
            um = u.copy()
            up[i] += h
            um[i] -= h
            fp[i] = feval(up)
            fm[i] = feval(um)
        grads = (fp - fm).T / (2.0 * h)
        hess = np.empty((F, n, n))
        for i in range(n):
            hess[:, i, i] = (fp[i] - 2.0 * f0 + fm[i]) / (h * h)
        for i in range(n):
            for jdx in range(i + 1, n):
                upp = u.copy()
                upp[i] += h
                upp[jdx] += h
                upm = u.copy()
                upm[i] += h
                upm[jdx] -= h
                ump = u.copy()
                ump[i] -= h
                ump[jdx] += h
                umm = u.copy()
                umm[i] -= h
                umm[jdx] -= h
                val = (feval(upp) - feval(upm) - feval(ump) + feval(umm)) / (4.0 * h * h)
                hess[:, i, jdx] = val
                hess[:, jdx, i] = val
        return f0, grads, hess


class LqrQuadraticFeatures(FeatureSet):
    """``[sum |x_i|^2, sum u_i^2]`` on point-mass trajectories.

    Both features are quadratic in the action sequence, so gradients and
    Hessians are closed-form. The Hessian of each feature depends only on the
    trajectory length and dt, which the IRL fit exploits to share one Hessian
    across a whole dataset.
    """

    dimension = 2
    min_length = 1
    kind = "lqr"
    shared_hessians = True

    def __init__(self):
        self._quad_cache: dict = {}

    def features(self, traj: Trajectory) -> np.ndarray:
        self.check_trajectory(traj)
        if traj.state_dim != 2 or traj.action_dim != 1:
            raise DimensionMismatchError(
                "quadratic features expect point-mass trajectories (state dim 2, action dim 1)"
            )
        f1, f2 = _kernels.quad_feature_sums(traj.states, traj.actions[:, 0])
        return np.array([f1, f2])

    def _quadratic_terms(self, n: int, dt: float):
        """Cached (Gamma^T Gamma, Gamma^T Phi, Phi^T Phi) for n stored steps."""
        key = (n, dt)
        cached = self._quad_cache.get(key)
        if cached is not None:
            return cached
        # X = Phi x0 + Gamma U stacks the stored states [x_0 ... x_{n-1}].
        gamma = np.zeros((2 * n, n))
        phi = np.zeros((2 * n, 2))
        for i in range(n):
            phi[2 * i] = (1.0, i * dt)
            phi[2 * i + 1] = (0.0, 1.0)
            for j in range(i):
                gamma[2 * i, j] = (i - 1 - j) * dt * dt
                gamma[2 * i + 1, j] = dt
        gtg = gamma.T @ gamma
        gtp = gamma.T @ phi
        ptp = phi.T @ phi
        for arr in (gtg, gtp, ptp):
            arr.setflags(write=False)
        self._quad_cache[key] = (gtg, gtp, ptp)
        return self._quad_cache[key]

    def cost_and_grad(self, model, x0, actions, theta, fd_step):
        u = np.asarray(actions, dtype=np.float64).reshape(-1)
        x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        gtg, gtp, ptp = self._quadratic_terms(len(u), model.dt)
        gtg_u = gtg @ u
        lin = gtp @ x0
        f1 = float(x0 @ ptp @ x0 + 2.0 * lin @ u + u @ gtg_u)
        f2 = float(u @ u)
        cost = theta[0] * f1 + theta[1] * f2
        grad = theta[0] * (2.0 * lin + 2.0 * gtg_u) + theta[1] * (2.0 * u)
        return cost, grad

    def action_derivatives(self, model, x0, actions, fd_step):
        u = np.asarray(actions, dtype=np.float64).reshape(-1)
        x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        n = len(u)
        gtg, gtp, ptp = self._quadratic_terms(n, model.dt)
        lin = gtp @ x0
        f = np.array([float(x0 @ ptp @ x0 + 2.0 * lin @ u + u @ (gtg @ u)), float(u @ u)])
        grads = np.vstack([2.0 * lin + 2.0 * (gtg @ u), 2.0 * u])
        hess = self._shared_hessian(n, model.dt)
        return f, grads, hess

    def _shared_hessian(self, n: int, dt: float) -> np.ndarray:
        key = ("H", n, dt)
        cached = self._quad_cache.get(key)
        if cached is None:
            gtg, _, _ = self._quadratic_terms(n, dt)
            cached = np.stack([2.0 * gtg, 2.0 * np.eye(n)])
            cached.setflags(write=False)
            self._quad_cache[key] = cached
        return cached


class DrivingLongitudinalFeatures(FeatureSet):
    """Longitudinal driving features over a reference path.

    Operates on point-mass trajectories in the path frame (state [s, v],
    action = longitudinal acceleration); only the arclength sequence enters
    the features, differentiated exactly as for observed data, so candidate
    rollouts and demonstrations are scored identically.
    """

    dimension = 3
    min_length = 4
    kind = "driving"
    shared_hessians = False

    def __init__(self, path: ReferencePath, config: Optional[FeatureConfig] = None):
        self.path = path
        self.config = config if config is not None else FeatureConfig()

    def features(self, traj: Trajectory) -> np.ndarray:
        self.check_trajectory(traj)
        if traj.state_dim != 2 or traj.action_dim != 1:
            raise DimensionMismatchError(
                "driving features expect path-frame point-mass trajectories "
                "(state dim 2, action dim 1)"
            )
        return _kernels.driving_features_from_s(
            traj.states[:, 0],
            traj.dt,
            self.path.arclengths,
            self.path.curvatures,
            self.config.a_desire,
            self.config.formula_code,
            self.config.v_cap,
        )

    def features_of_actions(self, model, x0, actions):
        u = np.asarray(actions, dtype=np.float64).reshape(-1)
        return _kernels.driving_features_of_actions(
            np.asarray(x0, dtype=np.float64).reshape(-1),
            u,
            model.dt,
            self.path.arclengths,
            self.path.curvatures,
            self.config.a_desire,
            self.config.formula_code,
            self.config.v_cap,
        )

    def cost_and_grad(self, model, x0, actions, theta, fd_step):
        cost, grad = _kernels.driving_cost_grad(
            np.asarray(x0, dtype=np.float64).reshape(-1),
            np.asarray(actions, dtype=np.float64).reshape(-1),
            model.dt,
            self.path.arclengths,
            self.path.curvatures,
            self.config.a_desire,
            self.config.formula_code,
            self.config.v_cap,
            np.asarray(theta, dtype=np.float64),
            fd_step,
        )
        return float(cost), grad

    def action_derivatives(self, model, x0, actions, fd_step):
        return _kernels.driving_derivs(
            np.asarray(x0, dtype=np.float64).reshape(-1),
            np.asarray(actions, dtype=np.float64).reshape(-1),
            model.dt,
            self.path.arclengths,
            self.path.curvatures,
            self.config.a_desire,
            self.config.formula_code,
            self.config.v_cap,
            fd_step,
        )


def make_straight_path(length: float, spacing: float = 1.0) -> ReferencePath:
    n = max(3, int(round(length / spacing)) + 1)
    xs = np.linspace(0.0, length, n)
    return ReferencePath(np.column_stack([xs, np.zeros(n)]))


def make_arc_path(radius: float, angle: float, spacing: float = 1.0, ccw: bool = True) -> ReferencePath:
    """Circular arc of the given radius subtending ``angle`` radians."""
    n = max(3, int(round(radius * angle / spacing)) + 1)
    t = np.linspace(0.0, angle, n)
    if ccw:
        pts = np.column_stack([radius * np.sin(t), radius * (1.0 - np.cos(t))])
    else:
        pts = np.column_stack([radius * np.sin(t), -radius * (1.0 - np.cos(t))])
    return ReferencePath(pts)


def make_sine_path(
    length: float, amplitude: float = 20.0, wavelength: float = 120.0, spacing: float = 1.0
) -> ReferencePath:
    """Sinusoidal road: smoothly varying curvature, useful for synthetic corpora."""
    n = max(3, int(round(length / spacing)) + 1)
    xs = np.linspace(0.0, length, n)
    ys = amplitude * np.sin(2.0 * np.pi * xs / wavelength)
    return ReferencePath(np.column_stack([xs, ys]))
