"""Continuous-domain maximum-entropy IRL with a Laplace-approximated likelihood.

Demonstrations are assumed exponentially more likely the lower their cost
``theta . f(xi)``; expanding the cost to second order around each demonstrated
action sequence turns the intractable normalizer into a Gaussian integral,
leaving (per demonstration, with g and H the scaled cost gradient and Hessian
in the action sequence)

    0.5 * g' (H + eps*I)^{-1} g  -  0.5 * logdet(H + eps*I)

to be minimized over cost weights on the probability simplex. Because the
cost is linear in theta, g and H are linear combinations of per-feature
gradients/Hessians computed once per demonstration; fitting then never
re-differentiates trajectories. Feature sets whose Hessians are demo
independent (the quadratic regulator features) additionally collapse the
per-demo quadratic terms into Gram matrices, making the fit cost independent
of the dataset size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import CostWeights, Trajectory
from .dynamics import DynamicsModel
from .errors import NumericalError, ValidationError
from .features import FeatureSet

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class IrlConfig:
    """Hyperparameters of the likelihood and its simplex optimizer.

    ``beta`` scales how sharply lower cost implies higher likelihood.
    ``hessian_reg`` is the Hessian ridge, relative to the mean diagonal of the
    trajectory Hessian (``eps = hessian_reg * trace(H)/dim``). ``grad_tol``
    is the projected-step stopping tolerance in theta space (the simplex has
    diameter 2, so this is scale-free). ``fd_step`` is the central-difference
    step used when a feature set has no closed-form action derivatives.
    """

    beta: float = 1.0
    hessian_reg: float = 1e-6
    max_iters: int = 300
    grad_tol: float = 1e-8
    n_restarts: int = 3
    fd_step: float = 1e-3

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValidationError(f"beta must be positive, got {self.beta}")
        if self.hessian_reg < 0.0:
            raise ValidationError(f"hessian_reg must be >= 0, got {self.hessian_reg}")
        if not self.grad_tol > 0.0:
            raise ValidationError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise ValidationError("max_iters and n_restarts must be >= 1")
        if not self.fd_step > 0.0:
            raise ValidationError(f"fd_step must be positive, got {self.fd_step}")


@dataclass(frozen=True)
class IrlResult:
    theta: CostWeights
    objective: float
    converged: bool
    iterations: int
    history: tuple = ()  # accepted objective values, for descent diagnostics


def trajectory_cost(traj: Trajectory, fs: FeatureSet, theta: CostWeights) -> float:
    """Linear trajectory cost ``theta . f(traj)``."""
    f = fs.features(traj)
    if len(f) != theta.dim:
        raise ValidationError(
            f"cost weights have dim {theta.dim} but features have dim {len(f)}"
        )
    return float(theta.theta @ f)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    cond = u - css / ind > 0.0
    rho = ind[cond][-1]
    tau = css[cond][-1] / rho
    return np.maximum(v - tau, 0.0)


class _LaplaceProblem:
    """Per-demo derivative cache plus objective/gradient evaluation.

    ``ghat[j] = beta * grad_u f_j`` and ``hhat[j] = beta * (hess_u f_j +
    hessian_reg * trace(hess_u f_j)/n * I)`` fold the rationality scale and
    the relative ridge into the per-feature pieces, keeping the assembled
    gradient g(theta) and regularized Hessian A(theta) exactly linear in
    theta (which the analytic theta-gradient below relies on).
    """

    def __init__(self, demos: Sequence[Trajectory], fs: FeatureSet, model: DynamicsModel,
                 config: IrlConfig):
        if len(demos) == 0:
            raise ValidationError("IRL needs at least one demonstration")
        self.dim = fs.dimension
        beta = config.beta
        reg = config.hessian_reg
        shared_groups: dict = {}
        self.demo_terms = []  # (ghat (F,n), hhat (F,n,n)) for demos with private Hessians
        for demo in demos:
            fs.check_trajectory(demo)
            x0 = demo.states[0]
            u = demo.actions.reshape(-1)
            _, grads, hess = fs.action_derivatives(model, x0, u, config.fd_step)
            n = grads.shape[1]
            ghat = beta * grads
            if fs.shared_hessians:
                key = (n, demo.dt)
                group = shared_groups.get(key)
                if group is None:
                    hhat = beta * (hess + _ridge_terms(hess, reg, n))
                    group = {"hhat": hhat, "count": 0,
                             "gram": np.zeros((self.dim, self.dim, n, n))}
                    shared_groups[key] = group
                group["count"] += 1
                for j in range(self.dim):
                    for l in range(self.dim):
                        group["gram"][j, l] += np.outer(ghat[j], ghat[l])
            else:
                hhat = beta * (hess + _ridge_terms(hess, reg, n))
                self.demo_terms.append((ghat, hhat))
        self.shared_groups = list(shared_groups.values())

    def value(self, theta: np.ndarray) -> float:
        return self._evaluate(theta, want_grad=False)[0]

    def value_and_grad(self, theta: np.ndarray):
        return self._evaluate(theta, want_grad=True)

    def _evaluate(self, theta, want_grad):
        total = 0.0
        grad = np.zeros(self.dim) if want_grad else None
        for ghat, hhat in self.demo_terms:
            a = np.tensordot(theta, hhat, axes=1)
            g = theta @ ghat
            chol = _cholesky(a)
            w = _cho_solve(chol, g)
            total += 0.5 * float(g @ w) - float(np.sum(np.log(np.diag(chol))))
            if want_grad:
                for j in range(self.dim):
                    zj = _cho_solve(chol, hhat[j])
                    grad[j] += float(ghat[j] @ w) - 0.5 * float(w @ hhat[j] @ w) \
                        - 0.5 * float(np.trace(zj))
        for group in self.shared_groups:
            hhat = group["hhat"]
            gram = group["gram"]
            count = group["count"]
            a = np.tensordot(theta, hhat, axes=1)
            chol = _cholesky(a)
            m = np.tensordot(np.outer(theta, theta), gram, axes=2)
            x = _cho_solve(chol, m)  # A^{-1} M
            total += 0.5 * float(np.trace(x)) - count * float(np.sum(np.log(np.diag(chol))))
            if want_grad:
                for j in range(self.dim):
                    zj = _cho_solve(chol, hhat[j])  # A^{-1} Hhat_j
                    # d/dtheta_j of 0.5*tr(A^{-1} M(theta)) = tr(A^{-1} sum_l theta_l T_jl)
                    # - 0.5*tr(A^{-1} Hhat_j A^{-1} M)   (T_lj collapses onto T_jl under the trace)
                    dm = np.tensordot(theta, gram[j], axes=1)
                    term1 = float(np.trace(_cho_solve(chol, dm)))
                    term2 = -0.5 * float(np.sum(x * zj.T))
                    grad[j] += term1 + term2 - 0.5 * count * float(np.trace(zj))
        if want_grad:
            return total, grad
        return total, None


def _ridge_terms(hess: np.ndarray, reg: float, n: int) -> np.ndarray:
    """Per-feature ridge reg * trace(H_j)/n * I (zero trace leaves no ridge)."""
    out = np.zeros_like(hess)
    eye = np.eye(n)
    for j in range(hess.shape[0]):
        out[j] = reg * (np.trace(hess[j]) / n) * eye
    return out


def _cho_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.cho_solve((chol, True), b, check_finite=False)


def _cholesky(a: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(
            "trajectory Hessian is not positive definite after regularization; "
            "increase IrlConfig.hessian_reg"
        ) from exc


def laplace_objective(
    theta: CostWeights,
    demos: Sequence[Trajectory],
    fs: FeatureSet,
    model: DynamicsModel,
    config: IrlConfig,
) -> float:
    """Summed Laplace-approximate negative log-likelihood terms; lower is better."""
    problem = _LaplaceProblem(demos, fs, model, config)
    return problem.value(np.asarray(theta.theta, dtype=np.float64))


def fit(
    demos: Sequence[Trajectory],
    fs: FeatureSet,
    model: DynamicsModel,
    config: IrlConfig,
    seed: int = 0,
) -> IrlResult:
    """Fit cost weights by projected gradient descent on the simplex.

    Runs ``n_restarts`` seeded random simplex initializations and keeps the
    best final objective. The backtracking line search never accepts an
    objective increase; a restart converges when the accepted step is shorter
    than ``grad_tol`` in L1 norm.
    """
    problem = _LaplaceProblem(demos, fs, model, config)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(config.n_restarts):
        theta0 = rng.dirichlet(np.ones(fs.dimension))
        result = _pgd(problem, theta0, config)
        if best is None or result[1] < best[1]:
            best = result
    theta, objective, converged, iterations, history = best
    return IrlResult(
        theta=CostWeights(theta),
        objective=objective,
        converged=converged,
        iterations=iterations,
        history=tuple(history),
    )


def _pgd(problem: _LaplaceProblem, theta0: np.ndarray, config: IrlConfig):
    theta = project_simplex(np.asarray(theta0, dtype=np.float64))
    value, grad = problem.value_and_grad(theta)
    history = [value]
    step_size = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        accepted = None
        for _ in range(_MAX_BACKTRACKS):
            candidate = project_simplex(theta - step_size * grad)
            direction = candidate - theta
            step_norm = float(np.abs(direction).sum())
            if step_norm == 0.0:
                break
            try:
                cand_value = problem.value(candidate)
            except NumericalError:
                cand_value = np.inf  # e.g. simplex corner with singular Hessian
            if np.isfinite(cand_value) and cand_value <= value + _ARMIJO_C1 * float(grad @ direction):
                accepted = (candidate, cand_value, step_norm)
                break
            step_size *= 0.5
        if accepted is None:
            converged = True  # no descent step exists at any reachable scale
            break
        theta, value, step_norm = accepted
        history.append(value)
        _, grad = problem.value_and_grad(theta)
        step_size = min(step_size * 2.0, 1e8)
        if step_norm <= config.grad_tol:
            converged = True
            break
    return theta, value, converged, iterations, history
