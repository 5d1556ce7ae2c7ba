"""Deterministic discrete-time dynamics and the finite-horizon regulator.

The point-mass model is

    p_{k+1} = p_k + dt * v_k
    v_{k+1} = v_k + dt * u_k

with state ``[p, v]`` and scalar acceleration action. It serves both the
synthetic regulator domain (p = position) and the longitudinal driving domain
(p = arclength along a reference path).

``lqr_solve`` returns the exact minimizer of

    J = sum_{i=0}^{N-1} ( q * |x_i|^2 + r * u_i^2 )

over action sequences, for the N stored states/actions of a trajectory. That
is the same quantity that the quadratic feature set's cost evaluates, which
makes the Riccati solution an exact oracle for the MPC optimizer. The last
action never enters J and is exactly zero in the returned trajectory.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Trajectory
from .errors import DimensionMismatchError, ValidationError


class DynamicsModel(ABC):
    """Deterministic transition model x_{k+1} = f(x_k, u_k)."""

    dt: float
    state_dim: int
    action_dim: int

    @abstractmethod
    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Single transition; raises DimensionMismatchError on bad shapes."""

    def rollout(self, x0: np.ndarray, actions: np.ndarray) -> Trajectory:
        """Trajectory with states[0] = x0 and one stored state per action."""
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if actions.shape[1] != self.action_dim:
            raise DimensionMismatchError(
                f"actions have dim {actions.shape[1]}, model expects {self.action_dim}"
            )
        n = actions.shape[0]
        if n < 1:
            raise ValidationError("rollout needs at least one action")
        states = np.empty((n, self.state_dim), dtype=np.float64)
        x = np.asarray(x0, dtype=np.float64).reshape(-1)
        for k in range(n):
            states[k] = x
            if k + 1 < n:
                x = self.step(x, actions[k])
        return Trajectory(states, actions, self.dt)


class PointMass(DynamicsModel):
    """Double-integrator point mass; see the module docstring."""

    state_dim = 2
    action_dim = 1

    def __init__(self, dt: float):
        if not dt > 0.0:
            raise ValidationError(f"dt must be positive, got {dt}")
        self.dt = float(dt)

    def step(self, x, u):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        if x.shape[0] != 2 or u.shape[0] != 1:
            raise DimensionMismatchError(
                f"point-mass step expects state dim 2 and action dim 1, "
                f"got {x.shape[0]} and {u.shape[0]}"
            )
        return np.array([x[0] + self.dt * x[1], x[1] + self.dt * u[0]])

    def rollout(self, x0, actions):
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if actions.shape[1] != 1:
            raise DimensionMismatchError(
                f"point-mass rollout expects action dim 1, got {actions.shape[1]}"
            )
        x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        if x0.shape[0] != 2:
            raise DimensionMismatchError(f"point-mass state dim must be 2, got {x0.shape[0]}")
        states = _kernels.pm_rollout(x0, actions[:, 0], self.dt)
        return Trajectory(states, actions, self.dt)


@dataclass(frozen=True)
class LqrParams:
    """Quadratic regulator parameters: stage cost q*|x|^2 + r*u^2."""

    q: float
    r: float
    horizon: int
    dt: float

    def __post_init__(self):
        if not (np.isfinite(self.q) and self.q > 0.0):
            raise ValidationError(f"q must be positive and finite, got {self.q}")
        if not (np.isfinite(self.r) and self.r > 0.0):
            raise ValidationError(f"r must be positive and finite, got {self.r}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt}")

    @property
    def ratio(self) -> float:
        return self.q / self.r


def lqr_solve(params: LqrParams, x0) -> Trajectory:
    """Optimal point-mass trajectory for the regulator cost; see module docstring."""
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape[0] != 2:
        raise DimensionMismatchError(f"regulator state must be 2-dimensional, got {x0.shape[0]}")
    states, actions = _kernels.lqr_pm_solve(params.q, params.r, params.horizon, params.dt, x0)
    return Trajectory(states, actions.reshape(-1, 1), params.dt)


def lqr_cost(params: LqrParams, traj: Trajectory) -> float:
    """Evaluate J over the stored states/actions of a trajectory."""
    f1, f2 = _kernels.quad_feature_sums(traj.states, traj.actions[:, 0])
    return params.q * f1 + params.r * f2
