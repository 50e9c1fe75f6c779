"""One-dimensional Gaussian mixtures as a (non-orthogonal) density basis."""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from ..lattice import BinEdges
from .embedding import SpectralEmbedding

VAR_FLOOR = 1e-6
FIXED_VARIANCES = (0.1, 0.5, 1.0, 2.0)


def _log_normal(x, means, variances):
    return -0.5 * (np.log(2 * np.pi * variances) + (x[:, None] - means) ** 2 / variances)


def _em(x, K, rng, max_iter, tol):
    uniq = np.unique(x)
    means = rng.choice(uniq, size=K, replace=False).astype(float)
    variances = np.full(K, max(x.var(), VAR_FLOOR))
    weights = np.full(K, 1.0 / K)
    prev = -np.inf
    ll = prev
    for _ in range(max_iter):
        log_joint = _log_normal(x, means, variances) + np.log(np.maximum(weights, 1e-300))
        log_norm = logsumexp(log_joint, axis=1)
        ll = float(log_norm.mean())
        if ll - prev < tol:
            break
        prev = ll
        resp = np.exp(log_joint - log_norm[:, None])
        nk = resp.sum(axis=0)
        alive = nk > 1e-12
        weights = nk / x.size
        means = np.where(alive, resp.T @ x / np.where(alive, nk, 1.0), means)
        sq = np.sum(resp * (x[:, None] - means) ** 2, axis=0) / np.where(alive, nk, 1.0)
        variances = np.where(alive, np.maximum(sq, VAR_FLOOR), variances)
    return ll, weights, means, variances


def fit_gmm(
    samples,
    K: int,
    restarts: int = 10,
    rng: np.random.Generator | None = None,
    action_bins: BinEdges | None = None,
    n_state_bins: int = 1,
    max_iter: int = 500,
    tol: float = 1e-8,
) -> SpectralEmbedding:
    """Fit a ``K``-component mixture by EM, keeping the best of ``restarts`` runs.

    EM stops when the mean log-likelihood improves by less than ``tol`` or
    after ``max_iter`` iterations; variances are floored at ``1e-6``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if K < 1:
        raise ValueError("K must be positive")
    if K > np.unique(x).size:
        raise ValueError(f"K={K} exceeds the {np.unique(x).size} distinct sample values")
    rng = np.random.default_rng() if rng is None else rng
    best = None
    for _ in range(max(1, restarts)):
        fit = _em(x, K, rng, max_iter, tol)
        if best is None or fit[0] > best[0]:
            best = fit
    _, weights, means, variances = best
    if action_bins is None:
        action_bins = BinEdges.uniform(x.min(), x.max(), 100)
    coeffs = {"weights": weights, "means": means, "variances": variances}
    return SpectralEmbedding("GMM", K, (n_state_bins, action_bins.b), coeffs, None, action_bins)


def mixture_density(emb: SpectralEmbedding, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.exp(_log_normal(x, emb["means"], emb["variances"])) @ emb["weights"]


def fit_fixed_basis_gmm(
    grid,
    target,
    K: int,
    rng: np.random.Generator | None = None,
    action_bins: BinEdges | None = None,
    low: float = -np.pi,
    high: float = np.pi,
) -> SpectralEmbedding:
    """Mixing weights over ``K`` random Gaussian atoms, fitted by NNLS.

    Atom means are uniform on ``[low, high]`` and variances are drawn from
    ``{0.1, 0.5, 1, 2}``.  ``target`` is the density tabulated on ``grid``.
    """
    if K < 1:
        raise ValueError("K must be positive")
    rng = np.random.default_rng() if rng is None else rng
    grid = np.asarray(grid, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    means = rng.uniform(low, high, size=K)
    variances = rng.choice(FIXED_VARIANCES, size=K)
    design = np.exp(_log_normal(grid, means, variances))
    weights, _ = nnls(design, target)
    total = weights.sum()
    weights = weights / total if total > 0 else np.full(K, 1.0 / K)
    if action_bins is None:
        action_bins = BinEdges.uniform(low, high, grid.size)
    coeffs = {"weights": weights, "means": means, "variances": variances}
    return SpectralEmbedding("GMM", K, (1, action_bins.b), coeffs, None, action_bins)


def gmm_table(emb: SpectralEmbedding) -> np.ndarray:
    row = mixture_density(emb, emb.action_bins.midpoints)
    return np.tile(row, (emb.shape[0], 1))
