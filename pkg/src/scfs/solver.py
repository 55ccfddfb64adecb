"""Alternating optimization of W, G and D with convergence tracing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DivergenceError, InvalidInputError, SolverError
from .evaluation import derive_seed, kmeans
from .numerics import (
    SolverConfig,
    as_data_matrix,
    check_shapes,
    normalization_penalty,
    objective_value,
    row_norms,
)

DIV_GUARD = 1e-12
INIT_RETRIES = 10
# halvings of the multiplicative exponent before a G step is rejected outright
MAX_DAMPING = 30


@dataclass
class FitResult:
    W: np.ndarray
    G: np.ndarray
    objective_trace: list
    penalized_trace: list
    iterations: int
    converged: bool
    ranking: np.ndarray
    row_norms: np.ndarray
    damped_steps: int = 0
    config: SolverConfig | None = None


@dataclass
class IterationState:
    """Snapshot handed to the ``fit`` callback after each iteration.

    ``W`` was solved against ``G_prev`` and ``D_prev``; ``G`` and ``D`` are the
    values carried into the next iteration.
    """

    iteration: int
    W: np.ndarray
    G_prev: np.ndarray
    G: np.ndarray
    D_prev: np.ndarray
    D: np.ndarray
    objective: float
    penalized: float
    damping: float = 1.0


def normalized_indicator(labels, c):
    """``G[i, k] = 1/sqrt(n_k)`` when sample ``i`` is in cluster ``k``."""
    labels = np.asarray(labels, dtype=int)
    counts = np.bincount(labels, minlength=c)
    if np.any(counts == 0):
        raise InvalidInputError("every cluster must be non-empty")
    G = np.zeros((labels.size, c))
    G[np.arange(labels.size), labels] = 1.0 / np.sqrt(counts[labels])
    return G


def init_G(X, cfg: SolverConfig):
    X = as_data_matrix(X)
    n, p = X.shape
    if cfg.c > min(n, p):
        raise InvalidInputError(f"c={cfg.c} exceeds min(n, p)={min(n, p)}")
    for attempt in range(INIT_RETRIES + 1):
        seed = cfg.seed if attempt == 0 else derive_seed(cfg.seed, attempt)
        labels = kmeans(X, cfg.c, seed=seed)
        if np.bincount(labels, minlength=cfg.c).min() > 0:
            return normalized_indicator(labels, cfg.c)
    raise SolverError(
        f"k-means left an empty cluster in {INIT_RETRIES + 1} attempts", config=cfg
    )


def _use_dual(n, p):
    # Cholesky of the p x p system vs. the n x n system from the push-through identity
    return n ** 3 / 3 + n * n * p < p ** 3 / 3


def update_W(X, G, D, cfg: SolverConfig, gram=None):
    """Solve ``(alpha X^T X + beta D) W = alpha X^T G`` for ``W``.

    When ``p`` is large relative to ``n`` the equivalent n x n system
    ``W = alpha D^-1 X^T (beta I + alpha X D^-1 X^T)^-1 G`` is factored
    instead. ``gram`` may carry a precomputed ``X.T @ X``.
    """
    X = np.asarray(X, dtype=float)
    G = np.asarray(G, dtype=float)
    D = np.asarray(D, dtype=float)
    n, p = X.shape
    if G.shape[0] != n or D.shape != (p,):
        raise InvalidInputError(f"inconsistent shapes: X {X.shape}, G {G.shape}, D {D.shape}")
    if not np.all(D > 0):
        raise InvalidInputError("D must be strictly positive")
    a, b = cfg.alpha, cfg.beta
    try:
        if _use_dual(n, p):
            Dinv = 1.0 / D
            XD = X * Dinv[None, :]
            K = a * (XD @ X.T)
            K[np.diag_indices_from(K)] += b
            Y = linalg.cho_solve(linalg.cho_factor(K, lower=True, check_finite=False), G)
            W = a * (XD.T @ Y)
        else:
            A = a * (X.T @ X if gram is None else gram)
            A[np.diag_indices_from(A)] += b * D
            W = linalg.cho_solve(
                linalg.cho_factor(A, lower=True, check_finite=False), a * (X.T @ G)
            )
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"W solve failed: {exc}", config=cfg) from exc
    if not np.all(np.isfinite(W)):
        raise SolverError("W solve produced non-finite values", config=cfg)
    return W


def update_D(W, cfg: SolverConfig):
    """Reweighting diagonal ``1 / (2 ||w_i|| + epsilon)``."""
    return 1.0 / (2.0 * row_norms(np.asarray(W, dtype=float)) + cfg.epsilon)


def compute_M(X, G, cfg: SolverConfig):
    """``(X X^T + n gamma 1) G`` without forming any n x n matrix."""
    X = np.asarray(X, dtype=float)
    G = np.asarray(G, dtype=float)
    n = X.shape[0]
    if G.shape[0] != n:
        raise InvalidInputError(f"inconsistent shapes: X {X.shape}, G {G.shape}")
    return X @ (X.T @ G) + (n * cfg.gamma) * G.sum(axis=0)[None, :]


def _update_ratio(X, G, W, M, alpha):
    num = np.maximum(2.0 * M + alpha * (X @ W), 0.0)
    den = M @ (G.T @ G) + G @ (G.T @ M) + alpha * G + DIV_GUARD
    return num / den


def update_G(X, G, W, cfg: SolverConfig, M=None):
    """One multiplicative step on the cluster indicator.

    ``G <- G * [2M + alpha XW]^+ / (M G^T G + G G^T M + alpha G + guard)``.
    Negative numerator entries are clamped so the result stays nonnegative.
    """
    X = np.asarray(X, dtype=float)
    G = np.asarray(G, dtype=float)
    W = np.asarray(W, dtype=float)
    check_shapes(X, W, G)
    if M is None:
        M = compute_M(X, G, cfg)
    return G * _update_ratio(X, G, W, M, cfg.alpha)


def penalized_gradient_G(X, G, W, cfg: SolverConfig):
    """Gradient of the penalized objective with respect to ``G`` at fixed ``W``."""
    M = compute_M(X, G, cfg)
    return (
        2.0 * M @ (G.T @ G)
        + 2.0 * G @ (G.T @ M)
        + 2.0 * cfg.alpha * G
        - 4.0 * M
        - 2.0 * cfg.alpha * (X @ W)
    )


def rank_features(W):
    """Feature indices by descending row norm of ``W``; ties by ascending index."""
    norms = row_norms(np.asarray(W, dtype=float))
    return np.lexsort((np.arange(norms.size), -norms)), norms


def _safeguarded_G(X, G, W, cfg, current):
    """Take the multiplicative step, damping it if the penalized objective rises.

    ``current`` is the penalized objective at ``(W, G)``. The exponent on the
    update ratio is halved until the step does not increase it; if none of the
    damped steps does, ``G`` is kept.
    """
    ratio = _update_ratio(X, G, W, compute_M(X, G, cfg), cfg.alpha)
    G_new = G * ratio
    if not cfg.safeguard:
        return G_new, 1.0
    value = objective_value(X, W, G_new, cfg) + normalization_penalty(G_new, cfg.gamma)
    if value <= current:
        return G_new, 1.0
    eta = 1.0
    with np.errstate(divide="ignore"):
        log_ratio = np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)), -np.inf)
    for _ in range(MAX_DAMPING):
        eta *= 0.5
        G_try = G * np.exp(eta * log_ratio)
        value = objective_value(X, W, G_try, cfg) + normalization_penalty(G_try, cfg.gamma)
        if value <= current:
            return G_try, eta
    return G.copy(), 0.0


def fit(X, cfg: SolverConfig, callback=None) -> FitResult:
    """Run SCFS on a preprocessed (finite, nonnegative) data matrix.

    Each iteration solves for ``W``, forms ``M``, takes a multiplicative step
    on ``G`` and refreshes ``D``. Iteration stops once
    ``(obj(t-1) - obj(t)) / obj(t) < cfg.tol`` for the unpenalized objective,
    or after ``cfg.max_iter`` iterations.

    ``callback``, if given, receives an :class:`IterationState` after every
    iteration.
    """
    X = as_data_matrix(X)
    if X.min() < 0:
        raise InvalidInputError("X must be nonnegative; preprocess it first")
    n, p = X.shape
    G = init_G(X, cfg)
    D = np.ones(p)
    gram = None if _use_dual(n, p) else X.T @ X

    objective_trace, penalized_trace = [], []
    damped = 0
    converged = False
    W = np.zeros((p, cfg.c))
    t = 0
    while t < cfg.max_iter:
        W = update_W(X, G, D, cfg, gram=gram)
        after_W = objective_value(X, W, G, cfg) + normalization_penalty(G, cfg.gamma)
        G_new, eta = _safeguarded_G(X, G, W, cfg, after_W)
        damped += eta < 1.0
        D_new = update_D(W, cfg)
        obj = objective_value(X, W, G_new, cfg)
        pen = obj + normalization_penalty(G_new, cfg.gamma)
        objective_trace.append(obj)
        penalized_trace.append(pen)
        t += 1
        if callback is not None:
            callback(IterationState(t, W, G, G_new, D, D_new, obj, pen, eta))
        G, D = G_new, D_new
        if not (np.isfinite(obj) and np.isfinite(pen)):
            raise DivergenceError(
                f"objective became non-finite at iteration {t}",
                config=cfg,
                objective_trace=objective_trace,
                penalized_trace=penalized_trace,
            )
        if t >= 2:
            prev = objective_trace[-2]
            if obj == 0.0 or (prev - obj) / obj < cfg.tol:
                converged = True
                break

    ranking, norms = rank_features(W)
    return FitResult(
        W=W,
        G=G,
        objective_trace=objective_trace,
        penalized_trace=penalized_trace,
        iterations=t,
        converged=converged,
        ranking=ranking,
        row_norms=norms,
        damped_steps=int(damped),
        config=cfg,
    )


def select_features(result: FitResult, k):
    """The ``k`` top-ranked feature indices."""
    p = len(result.ranking)
    if int(k) != k or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    if k > p:
        raise InvalidInputError(f"k={k} exceeds the number of features p={p}")
    return [int(i) for i in result.ranking[:k]]
