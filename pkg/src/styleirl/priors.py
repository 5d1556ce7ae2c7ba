"""Prior models over cost weights: Gaussian mixture and nearest-neighbor.

Training follows a two-stage recipe. Features are computed per training
demonstration and z-scored with training statistics (feature scales differ by
orders of magnitude, and both EM and nearest-neighbor distances would
otherwise be dominated by one dimension; the statistics are stored with the
model and reused at query time). The mixture variant clusters the features
with full-covariance EM, hard-assigns each demonstration to its most probable
kernel, and fits one set of cost weights per kernel; the nearest-neighbor
variant fits cost weights per demonstration and answers queries with an
inverse-distance-weighted combination of the neighbors' weights.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import CostWeights, Dataset, Trajectory
from .dynamics import DynamicsModel
from .errors import NumericalError, ValidationError
from .features import FeatureSet
from .irl import IrlConfig, fit as irl_fit

logger = logging.getLogger(__name__)

_EXACT_MATCH_DIST = 1e-12


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-scoring with frozen training statistics."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        features = np.asarray(features, dtype=np.float64)
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean, std)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, f: np.ndarray) -> np.ndarray:
        return (np.asarray(f, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class GmmModel:
    """Full-covariance Gaussian mixture in feature space."""

    weights: np.ndarray      # (k,)
    means: np.ndarray        # (k, F)
    covariances: np.ndarray  # (k, F, F)
    log_likelihood: float = float("nan")
    history: tuple = ()      # per-iteration training log-likelihood
    reinit_events: int = 0   # kernels re-seeded after collapsing to empty

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        mu = np.asarray(self.means, dtype=np.float64)
        cov = np.asarray(self.covariances, dtype=np.float64)
        if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("mixture weights must be positive and sum to 1")
        if mu.shape[0] != len(w) or cov.shape[0] != len(w):
            raise ValidationError("mixture parameter shapes disagree")
        for i in range(len(w)):
            eig = np.linalg.eigvalsh(cov[i])
            if eig[0] <= 0.0:
                raise ValidationError(f"covariance of kernel {i} is not positive definite")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def k(self) -> int:
        return len(self.weights)


def _component_log_densities(model_weights, means, covariances, x: np.ndarray) -> np.ndarray:
    """log(w_i * N(x; mu_i, Sigma_i)) for every kernel, rows = samples."""
    x = np.atleast_2d(x)
    n, dim = x.shape
    k = len(model_weights)
    out = np.empty((n, k))
    for i in range(k):
        chol = scipy.linalg.cholesky(covariances[i], lower=True, check_finite=False)
        diff = (x - means[i]).T
        sol = scipy.linalg.solve_triangular(chol, diff, lower=True, check_finite=False)
        maha = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, i] = np.log(model_weights[i]) - 0.5 * (
            maha + logdet + dim * np.log(2.0 * np.pi)
        )
    return out


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    return (amax + np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True))).squeeze(axis)


def gmm_fit(
    features,
    k: int,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 200,
    cov_reg: float = 1e-6,
    n_restarts: int = 5,
) -> GmmModel:
    """Fit a k-kernel full-covariance mixture by EM.

    Initialization is k-means++ seeding on the features; the best of
    ``n_restarts`` seeded runs (by final log-likelihood) wins. Covariances get
    ``cov_reg * I`` added every M-step. A kernel whose responsibility mass
    collapses is re-seeded from the point farthest from its mean (counted in
    ``reinit_events``; the monotone log-likelihood guarantee applies between
    re-seeds only).
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"features must be an (n, F) array, got shape {x.shape}")
    n = len(x)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of feature vectors ({n})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        model = _em_once(x, k, rng, tol, max_iter, cov_reg)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    return best


def _kmeanspp_seeds(x: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0.0:
            centers.append(x[rng.integers(n)])
            continue
        centers.append(x[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def _em_once(x, k, rng, tol, max_iter, cov_reg):
    n, dim = x.shape
    means = _kmeanspp_seeds(x, k, rng)
    global_cov = np.cov(x.T).reshape(dim, dim) + cov_reg * np.eye(dim)
    covariances = np.repeat(global_cov[None], k, axis=0)
    weights = np.full(k, 1.0 / k)
    history = []
    reinits = 0
    prev_ll = -np.inf
    for _ in range(max_iter):
        logdens = _component_log_densities(weights, means, covariances, x)
        lognorm = _logsumexp(logdens, axis=1)
        ll = float(lognorm.sum())
        history.append(ll)
        resp = np.exp(logdens - lognorm[:, None])
        nk = resp.sum(axis=0)
        for i in range(k):
            if nk[i] < 1e-10:
                # collapsed kernel: re-seed from the farthest point
                far = int(np.argmax(np.sum((x - means[i]) ** 2, axis=1)))
                means[i] = x[far]
                covariances[i] = global_cov
                weights = np.full(k, 1.0 / k)
                reinits += 1
                break
        else:
            weights = nk / n
            for i in range(k):
                means[i] = resp[:, i] @ x / nk[i]
                diff = x - means[i]
                covariances[i] = (resp[:, i] * diff.T) @ diff / nk[i] + cov_reg * np.eye(dim)
            if np.isfinite(prev_ll) and abs(ll - prev_ll) <= tol * max(1.0, abs(prev_ll)):
                break
            prev_ll = ll
            continue
        prev_ll = -np.inf  # restart the convergence window after a re-seed
    return GmmModel(
        weights=weights,
        means=means,
        covariances=covariances,
        log_likelihood=history[-1] if history else float("nan"),
        history=tuple(history),
        reinit_events=reinits,
    )


def gmm_assign(model: GmmModel, f) -> int:
    """Index of the kernel maximizing the weighted component density at ``f``.

    Ties break toward the lowest index.
    """
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    if f.shape[0] != model.means.shape[1]:
        raise ValidationError(
            f"feature dim {f.shape[0]} does not match mixture dim {model.means.shape[1]}"
        )
    logdens = _component_log_densities(model.weights, model.means, model.covariances, f)
    return int(np.argmax(logdens[0]))


class StyleModel:
    """A trained prior over cost weights; subclasses implement ``infer``.

    ``infer`` takes a raw feature vector, applies the stored training
    standardization, and returns the cost weights the model considers most
    likely for it.
    """

    kind: str = "abstract"

    def __init__(self, feature_kind: str, standardizer: Standardizer):
        self.feature_kind = feature_kind
        self.standardizer = standardizer

    def infer(self, f: np.ndarray, k_query: int = 1) -> CostWeights:
        raise NotImplementedError


class SingleStyleModel(StyleModel):
    """One cost function for everything (traditional single-cost IRL)."""

    kind = "single"

    def __init__(self, theta: CostWeights, feature_kind: str, standardizer: Standardizer):
        super().__init__(feature_kind, standardizer)
        self.theta = theta

    def infer(self, f, k_query: int = 1) -> CostWeights:
        return self.theta


class GmmStyleModel(StyleModel):
    """Mixture prior: one cost function per Gaussian kernel."""

    kind = "gmm"

    def __init__(self, gmm: GmmModel, thetas: Sequence[CostWeights], feature_kind: str,
                 standardizer: Standardizer, train_assignments: Sequence[int] = ()):
        super().__init__(feature_kind, standardizer)
        if len(thetas) != gmm.k:
            raise ValidationError(
                f"need one set of cost weights per kernel, got {len(thetas)} for k={gmm.k}"
            )
        self.gmm = gmm
        self.thetas = tuple(thetas)
        self.train_assignments = tuple(int(i) for i in train_assignments)

    @property
    def member_counts(self) -> tuple:
        return tuple(self.train_assignments.count(i) for i in range(self.gmm.k))

    def infer(self, f, k_query: int = 1) -> CostWeights:
        z = self.standardizer.transform(f)
        return self.thetas[gmm_assign(self.gmm, z)]


class KnnStyleModel(StyleModel):
    """Nearest-neighbor prior: one cost function per training demonstration.

    Entry features are stored standardized; queries use Euclidean distance in
    that space.
    """

    kind = "knn"

    def __init__(self, entry_features, entry_thetas: Sequence[CostWeights],
                 feature_kind: str, standardizer: Standardizer, dropped: int = 0):
        super().__init__(feature_kind, standardizer)
        features = np.asarray(entry_features, dtype=np.float64)
        if features.ndim != 2 or len(features) < 1:
            raise ValidationError("nearest-neighbor model needs at least one entry")
        if len(entry_thetas) != len(features):
            raise ValidationError("entry features and cost weights must align")
        features.setflags(write=False)
        self.entry_features = features
        self.entry_thetas = tuple(entry_thetas)
        self.dropped = dropped

    def __len__(self) -> int:
        return len(self.entry_thetas)

    def infer(self, f, k_query: int = 1) -> CostWeights:
        return knn_query(self, f, k_query)


def knn_query(model: KnnStyleModel, q, k: int) -> CostWeights:
    """Inverse-distance-weighted cost weights of the k nearest entries.

    The query is standardized with the model's training statistics. An entry
    at distance < 1e-12 is returned directly (lowest index wins); otherwise
    the neighbors' weights are combined with 1/distance weights and
    renormalized back onto the simplex. Distance ties resolve by entry index.
    """
    if not 1 <= k <= len(model):
        raise ValidationError(f"k must lie in [1, {len(model)}], got {k}")
    z = model.standardizer.transform(np.asarray(q, dtype=np.float64).reshape(-1))
    if z.shape[0] != model.entry_features.shape[1]:
        raise ValidationError(
            f"query dim {z.shape[0]} does not match entry dim {model.entry_features.shape[1]}"
        )
    dists = np.sqrt(np.sum((model.entry_features - z) ** 2, axis=1))
    exact = np.flatnonzero(dists < _EXACT_MATCH_DIST)
    if len(exact) > 0:
        return model.entry_thetas[int(exact[0])]
    order = np.argsort(dists, kind="stable")[:k]
    inv = 1.0 / dists[order]
    combined = np.zeros(model.entry_thetas[0].dim)
    for idx, w in zip(order, inv):
        combined += w * model.entry_thetas[int(idx)].theta
    return CostWeights(combined)


def train_tirl(
    data: Dataset, fs: FeatureSet, model: DynamicsModel, irl: IrlConfig, seed: int = 0
) -> SingleStyleModel:
    """Fit one cost function to the whole training split."""
    train = data.train_demos()
    if not train:
        raise ValidationError("training split is empty")
    feats = np.array([fs.features(d) for d in train])
    standardizer = Standardizer.fit(feats)
    result = irl_fit(train, fs, model, irl, seed=seed)
    return SingleStyleModel(result.theta, fs.kind, standardizer)


def train_pirl_gmm(
    data: Dataset,
    fs: FeatureSet,
    model: DynamicsModel,
    k: int,
    irl: IrlConfig,
    seed: int = 0,
) -> GmmStyleModel:
    """Cluster training features with a k-kernel mixture, fit weights per kernel."""
    train = data.train_demos()
    if not train:
        raise ValidationError("training split is empty")
    feats = np.array([fs.features(d) for d in train])
    standardizer = Standardizer.fit(feats)
    z = np.array([standardizer.transform(f) for f in feats])
    gmm = gmm_fit(z, k, seed=seed)
    assignments = [gmm_assign(gmm, zi) for zi in z]
    thetas = []
    for i in range(k):
        subset = [train[j] for j, a in enumerate(assignments) if a == i]
        if not subset:
            raise NumericalError(
                f"kernel {i} has no assigned demonstrations; reduce k or reseed"
            )
        thetas.append(irl_fit(subset, fs, model, irl, seed=seed + i).theta)
    return GmmStyleModel(gmm, thetas, fs.kind, standardizer, assignments)


def train_pirl_knn(
    data: Dataset, fs: FeatureSet, model: DynamicsModel, irl: IrlConfig, seed: int = 0
) -> KnnStyleModel:
    """Fit one set of cost weights per training demonstration.

    Demonstrations whose fit fails are dropped (with a warning carrying the
    count); at least one entry must survive.
    """
    train = data.train_demos()
    if not train:
        raise ValidationError("training split is empty")
    feats = np.array([fs.features(d) for d in train])
    standardizer = Standardizer.fit(feats)
    entries_f = []
    entries_t = []
    dropped = 0
    for demo, f in zip(train, feats):
        try:
            result = irl_fit([demo], fs, model, irl, seed=seed)
        except (NumericalError, ValidationError) as exc:
            logger.debug("dropping demonstration from the index: %s", exc)
            dropped += 1
            continue
        entries_f.append(standardizer.transform(f))
        entries_t.append(result.theta)
    if dropped:
        warnings.warn(f"dropped {dropped} demonstration(s) whose cost fit failed")
    if not entries_f:
        raise NumericalError("every per-demonstration fit failed; no entries to index")
    return KnnStyleModel(np.array(entries_f), entries_t, fs.kind, standardizer, dropped)
