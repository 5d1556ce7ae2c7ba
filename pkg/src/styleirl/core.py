"""Core domain types: trajectories, cost weights, datasets.

States, actions, and feature vectors are plain float64 numpy arrays; the
classes below add the invariants that the rest of the package relies on.
All types are immutable after construction (arrays are marked read-only), so
they can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, ValidationError

if TYPE_CHECKING:
    from .dynamics import DynamicsModel


def _as_readonly_f64(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Trajectory:
    """A demonstrated or predicted motion: N states, N actions, fixed dt.

    ``states[k+1]`` is expected to equal the dynamics step from
    ``(states[k], actions[k])``; the final action has no successor state
    stored (it is recoverable by one more rollout step). All cost/feature
    sums in this package run over exactly the stored N entries.
    """

    states: np.ndarray   # (N, state_dim)
    actions: np.ndarray  # (N, action_dim)
    dt: float

    def __post_init__(self):
        states = _as_readonly_f64(self.states, "states", 2)
        actions = _as_readonly_f64(self.actions, "actions", 2)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "dt", float(self.dt))
        if len(states) != len(actions):
            raise ValidationError(
                f"states and actions must have equal length, got {len(states)} vs {len(actions)}"
            )
        if len(states) < 1:
            raise ValidationError("trajectory must contain at least one step")
        if not (self.dt > 0.0) or not np.isfinite(self.dt):
            raise ValidationError(f"dt must be positive and finite, got {self.dt}")

    @property
    def n_steps(self) -> int:
        return len(self.states)

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def action_dim(self) -> int:
        return self.actions.shape[1]

    def slice(self, start: int, stop: Optional[int] = None) -> "Trajectory":
        """Sub-trajectory over the half-open step range [start, stop)."""
        return Trajectory(self.states[start:stop], self.actions[start:stop], self.dt)


@dataclass(frozen=True)
class CostWeights:
    """Nonnegative cost weights normalized to unit L1 norm.

    The scale of the weight vector is non-identifiable (the rationality
    coefficient absorbs it, and every argmin under the cost is invariant to
    positive scaling), so constructors normalize and reject vectors that are
    negative anywhere or sum to zero.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValidationError("cost weights contain non-finite entries")
        if np.any(theta < 0.0):
            raise ValidationError("cost weights must be nonnegative")
        total = float(theta.sum())
        if total <= 0.0:
            raise ValidationError("cost weights must have a positive sum")
        theta = theta / total
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class Dataset:
    """Demonstrations plus a train/test index partition and optional labels.

    ``labels`` carries a per-demonstration ground-truth scalar for synthetic
    corpora (the generating q/r ratio for the regulator domain, the style
    index for the driving-like domain); it is None for real data.
    """

    demonstrations: tuple
    train_idx: tuple
    test_idx: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        demos = tuple(self.demonstrations)
        train = tuple(int(i) for i in self.train_idx)
        test = tuple(int(i) for i in self.test_idx)
        object.__setattr__(self, "demonstrations", demos)
        object.__setattr__(self, "train_idx", train)
        object.__setattr__(self, "test_idx", test)
        n = len(demos)
        if set(train) & set(test):
            raise ValidationError("train and test indices overlap")
        if set(train) | set(test) != set(range(n)):
            raise ValidationError("train/test indices must partition the demonstrations")
        if len(train) + len(test) != n:
            raise ValidationError("duplicate indices in the train/test partition")
        if self.labels is not None:
            labels = tuple(float(v) for v in self.labels)
            if len(labels) != n:
                raise ValidationError(
                    f"labels must align with demonstrations, got {len(labels)} for {n} demos"
                )
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.demonstrations)

    def train_demos(self) -> list:
        return [self.demonstrations[i] for i in self.train_idx]

    def test_demos(self) -> list:
        return [self.demonstrations[i] for i in self.test_idx]

    def train_labels(self) -> Optional[list]:
        if self.labels is None:
            return None
        return [self.labels[i] for i in self.train_idx]

    def test_labels(self) -> Optional[list]:
        if self.labels is None:
            return None
        return [self.labels[i] for i in self.test_idx]


def validate_trajectory(traj: Trajectory, model: "DynamicsModel", tol: float) -> bool:
    """Check that every stored transition satisfies the dynamics model.

    Returns True iff ``||states[k+1] - step(states[k], actions[k])|| <= tol``
    for every k with a stored successor. The final action has no successor to
    check against.
    """
    if traj.state_dim != model.state_dim or traj.action_dim != model.action_dim:
        raise DimensionMismatchError(
            f"trajectory dims ({traj.state_dim}, {traj.action_dim}) do not match "
            f"model dims ({model.state_dim}, {model.action_dim})"
        )
    for k in range(traj.n_steps - 1):
        predicted = model.step(traj.states[k], traj.actions[k])
        if float(np.linalg.norm(traj.states[k + 1] - predicted)) > tol:
            return False
    return True


def split_dataset(
    demos: Sequence[Trajectory],
    train_fraction: float,
    seed: int,
    labels: Optional[Sequence[float]] = None,
) -> Dataset:
    """Seeded-shuffle split into train/test index sets.

    ``|train| = round(train_fraction * |demos|)``; the split is deterministic
    for a fixed seed and must leave both sides non-empty.
    """
    demos = tuple(demos)
    n = len(demos)
    if n == 0:
        raise ValidationError("cannot split an empty demonstration list")
    if n < 2:
        raise ValidationError("need at least two demonstrations to split")
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValidationError(
            f"train_fraction {train_fraction} leaves an empty split for {n} demonstrations"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train = tuple(sorted(int(i) for i in perm[:n_train]))
    test = tuple(sorted(int(i) for i in perm[n_train:]))
    return Dataset(demos, train, test, tuple(labels) if labels is not None else None)
