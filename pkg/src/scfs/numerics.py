"""Matrix norms, solver configuration and the SCFS objective functions.

Conventions used throughout the package:

* ``X`` is an ``(n, p)`` array, samples in rows and features in columns.
* ``G`` is the nonnegative ``(n, c)`` cluster indicator; ``G @ G.T`` is the
  learned sample similarity.
* ``W`` is the ``(p, c)`` transformation whose row norms score the features.
* ``D`` is carried as its length-``p`` diagonal only.

The ``n x n`` all-ones matrix of the normalization constraint never appears
explicitly: ``G G^T 1`` has identical columns, each equal to
``G @ G.sum(axis=0)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError

DEFAULT_GAMMA = 1e6
DEFAULT_EPSILON = 1e-12
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one SCFS fit.

    Parameters
    ----------
    alpha : float
        Weight of the regression term ``||XW - G||_F^2``.
    beta : float
        Weight of the row-sparsity term ``||W||_{2,1}``.
    c : int
        Number of clusters (columns of ``G`` and ``W``).
    gamma : float
        Weight of the penalty enforcing ``G G^T 1 = 1``.
    epsilon : float
        Offset keeping the reweighting diagonal finite for zero rows of ``W``.
    tol : float
        Relative decrease of the objective below which iteration stops.
    max_iter : int
        Iteration cap.
    seed : int
        Seed for every randomized step (the k-means initialization of ``G``).
    safeguard : bool
        Damp a ``G`` step that would increase the penalized objective.
    """

    alpha: float
    beta: float
    c: int
    gamma: float = DEFAULT_GAMMA
    epsilon: float = DEFAULT_EPSILON
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    safeguard: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "epsilon", "tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be a finite positive number, got {value!r}")
        if int(self.c) != self.c or self.c < 1:
            raise InvalidInputError(f"c must be a positive integer, got {self.c!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidInputError(f"seed must be an unsigned integer, got {self.seed!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _finite(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return M


def as_data_matrix(X):
    """Validate ``X`` as a sample-by-feature matrix and return it as float array."""
    X = _finite(X, "data matrix")
    if X.ndim != 2:
        raise InvalidInputError(f"data matrix must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise InvalidInputError(f"data matrix needs n >= 2 and p >= 1, got {X.shape}")
    return X


def check_shapes(X, W, G):
    """Raise unless ``X`` is (n, p), ``W`` is (p, c) and ``G`` is (n, c)."""
    X, W, G = np.asarray(X), np.asarray(W), np.asarray(G)
    if X.ndim != 2 or W.ndim != 2 or G.ndim != 2:
        raise InvalidInputError("X, W and G must all be 2-D")
    n, p = X.shape
    if W.shape[0] != p or G.shape[0] != n or W.shape[1] != G.shape[1]:
        raise InvalidInputError(
            f"inconsistent shapes: X {X.shape}, W {W.shape}, G {G.shape}"
        )


def row_norms(M):
    """Euclidean norm of every row of ``M``."""
    return np.sqrt(np.einsum("ij,ij->i", M, M))


def l21_norm(M):
    """Sum of the Euclidean norms of the rows of ``M``."""
    M = _finite(M)
    if M.ndim == 1:
        M = M[:, None]
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    # rescaled so tiny entries do not underflow when squared
    return float(scale * row_norms(M / scale).sum())


def frobenius_norm_sq(M):
    """Sum of squared entries of ``M``."""
    M = _finite(M)
    return float(np.sum(M * M))


def similarity_row_sums(G):
    """Row sums of ``G @ G.T`` computed in O(nc)."""
    G = np.asarray(G, dtype=float)
    return G @ G.sum(axis=0)


def constraint_residual(G):
    """Largest deviation of a row sum of ``G @ G.T`` from one."""
    G = _finite(G, "G")
    return float(np.max(np.abs(similarity_row_sums(G) - 1.0)))


def _terms(X, W, G):
    X = _finite(X, "X")
    W = _finite(W, "W")
    G = _finite(G, "G")
    check_shapes(X, W, G)
    recon = X - G @ (G.T @ X)
    fit = X @ W - G
    return (
        float(np.einsum("ij,ij->", recon, recon)),
        float(np.einsum("ij,ij->", fit, fit)),
        float(row_norms(W).sum()),
    )


def objective_value(X, W, G, cfg: SolverConfig) -> float:
    """Unconstrained SCFS objective.

    ``||X - G G^T X||_F^2 + alpha ||XW - G||_F^2 + beta ||W||_{2,1}``.
    This is the quantity the stopping rule watches.
    """
    recon, fit, sparsity = _terms(X, W, G)
    return recon + cfg.alpha * fit + cfg.beta * sparsity


def normalization_penalty(G, gamma):
    """``gamma * ||G G^T 1 - 1||_F^2`` for the n x n all-ones matrix 1."""
    G = np.asarray(G, dtype=float)
    r = similarity_row_sums(G) - 1.0
    return float(gamma * G.shape[0] * np.dot(r, r))


def penalized_objective(X, W, G, cfg: SolverConfig) -> float:
    """Objective plus the normalization penalty; non-increasing under the updates."""
    return objective_value(X, W, G, cfg) + normalization_penalty(G, cfg.gamma)
