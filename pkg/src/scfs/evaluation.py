"""Clustering evaluation: k-means, best label matching, Accuracy and NMI."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .numerics import as_data_matrix

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6


def derive_seed(seed, *keys):
    """Deterministic 32-bit sub-seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1)[0])


def _labels(y, name="labels"):
    y = np.asarray(y)
    if y.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D vector, got shape {y.shape}")
    return y


def _pair(y, z):
    y, z = _labels(y, "y"), _labels(z, "z")
    if y.shape != z.shape:
        raise InvalidInputError(f"label vectors differ in length: {y.size} != {z.size}")
    return y, z


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.einsum("ij,ij->i", X - centers[0], X - centers[0])
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = X[idx]
        diff = X - centers[j]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return centers


def _assign(X, centers):
    # squared distances up to a per-row constant
    d = -2.0 * X @ centers.T + np.einsum("ij,ij->i", centers, centers)[None, :]
    return np.argmin(d, axis=1)


def kmeans(X, k, seed=0, max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL):
    """Lloyd's k-means from a seeded k-means++ start.

    Iterates until the relative centroid shift drops below ``tol`` or
    ``max_iter`` is reached. A cluster that empties keeps its previous
    centroid. Returns integer labels in ``0..k-1``.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    if int(k) != k or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    if k > n:
        raise InvalidInputError(f"k={k} exceeds the number of samples n={n}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, k, rng)
    labels = _assign(X, centers)
    for _ in range(max_iter):
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        new = centers.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        shift = np.linalg.norm(new - centers)
        scale = np.linalg.norm(centers)
        centers = new
        labels = _assign(X, centers)
        if shift <= tol * max(scale, np.finfo(float).tiny):
            break
    return labels


def confusion_matrix(y, z):
    """Counts ``C[a, b]`` of samples with class ``ys[a]`` in y and ``zs[b]`` in z."""
    y, z = _pair(y, z)
    ys, yi = np.unique(y, return_inverse=True)
    zs, zi = np.unique(z, return_inverse=True)
    C = np.zeros((ys.size, zs.size), dtype=np.int64)
    np.add.at(C, (yi, zi), 1)
    return C, ys, zs


def best_map(y, z):
    """Relabel ``z`` so that it agrees with ``y`` on as many samples as possible.

    The assignment is solved with the Kuhn-Munkres algorithm on the
    (zero-padded, square) confusion matrix. Clusters of ``z`` left without a
    partner class receive fresh ids that do not occur in ``y``.
    """
    y, z = _pair(y, z)
    if y.size == 0:
        return z.copy()
    C, ys, zs = confusion_matrix(y, z)
    size = max(C.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: C.shape[0], : C.shape[1]] = C
    rows, cols = linear_sum_assignment(padded, maximize=True)

    target = {}
    for r, s in zip(rows, cols):
        if s < zs.size and r < ys.size:
            target[s] = ys[r]
    if np.issubdtype(ys.dtype, np.integer):
        fresh = iter(range(int(ys.max()) + 1, int(ys.max()) + 1 + zs.size))
    else:
        fresh = iter(f"__unmatched_{j}" for j in range(zs.size))
    lookup = np.empty(zs.size, dtype=object)
    for s in range(zs.size):
        lookup[s] = target[s] if s in target else next(fresh)
    _, zi = np.unique(z, return_inverse=True)
    mapped = lookup[zi]
    try:
        return mapped.astype(y.dtype)
    except (TypeError, ValueError):
        return mapped


def accuracy(y, z):
    """Fraction of samples whose best-mapped cluster id equals the true class."""
    y, z = _pair(y, z)
    if y.size == 0:
        raise InvalidInputError("accuracy of empty label vectors is undefined")
    return float(np.mean(best_map(y, z) == y))


def entropy(y):
    """Shannon entropy (natural log) of the empirical label distribution."""
    y = _labels(y)
    _, counts = np.unique(y, return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def mutual_information(y, z):
    C, _, _ = confusion_matrix(y, z)
    n = C.sum()
    pxy = C / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))


def nmi_with_flag(y, z):
    """NMI and whether the both-constant fallback was used."""
    y, z = _pair(y, z)
    if y.size == 0:
        raise InvalidInputError("NMI of empty label vectors is undefined")
    denom = max(entropy(y), entropy(z))
    if denom == 0.0:
        # both partitions are a single block: identical partitions
        return 1.0, True
    value = mutual_information(y, z) / denom
    return float(min(max(value, 0.0), 1.0)), False


def nmi(y, z):
    """Mutual information normalized by the larger of the two entropies."""
    return nmi_with_flag(y, z)[0]


@dataclass
class EvalReport:
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    trials: int
    per_trial: list = field(default_factory=list)
    nmi_degenerate: int = 0

    @classmethod
    def from_trials(cls, per_trial, nmi_degenerate=0):
        arr = np.asarray(per_trial, dtype=float).reshape(-1, 2)
        return cls(
            acc_mean=float(arr[:, 0].mean()),
            acc_std=float(arr[:, 0].std()),
            nmi_mean=float(arr[:, 1].mean()),
            nmi_std=float(arr[:, 1].std()),
            trials=len(arr),
            per_trial=[(float(a), float(b)) for a, b in arr],
            nmi_degenerate=nmi_degenerate,
        )

    def to_dict(self):
        d = asdict(self)
        d["per_trial"] = [list(t) for t in self.per_trial]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["per_trial"] = [tuple(t) for t in d["per_trial"]]
        return cls(**d)


def evaluate_selection(X, feature_indices, y, trials=20, seed=0):
    """Cluster ``X[:, feature_indices]`` ``trials`` times and score against ``y``.

    k-means uses as many clusters as ``y`` has classes; trial ``t`` runs with
    seed ``derive_seed(seed, t)``. Standard deviations are population ones.
    """
    X = as_data_matrix(X)
    idx = np.asarray(feature_indices, dtype=int).ravel()
    if idx.size == 0:
        raise InvalidInputError("feature_indices is empty")
    if idx.min() < 0 or idx.max() >= X.shape[1]:
        raise InvalidInputError(f"feature index out of range for p={X.shape[1]}")
    y = _labels(y, "y")
    if y.size != X.shape[0]:
        raise InvalidInputError(f"y has {y.size} labels for {X.shape[0]} samples")
    if int(trials) != trials or trials < 1:
        raise InvalidInputError(f"trials must be a positive integer, got {trials!r}")
    Xs = X[:, idx]
    k = np.unique(y).size
    per_trial = []
    degenerate = 0
    for t in range(trials):
        z = kmeans(Xs, k, seed=derive_seed(seed, t))
        value, flag = nmi_with_flag(y, z)
        degenerate += flag
        per_trial.append((accuracy(y, z), value))
    return EvalReport.from_trials(per_trial, nmi_degenerate=degenerate)
