"""Separable orthonormal wavelet truncation (Haar and 8-tap Daubechies).

Each axis is padded to the next power of two by symmetric extension and
transformed with the periodized filter bank down to a single approximation
coefficient.  The 2-D transform is the tensor product of the two 1-D
transforms, ``C = W_m X W_n^T``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..lattice import LatticePolicy
from .embedding import SpectralEmbedding, padded_shape

_SQRT_HALF = np.sqrt(0.5)

# lowpass decomposition filters; DB4 (four vanishing moments) from the minimum-phase
# spectral factorization, rounded from 60-digit arithmetic
FILTERS = {
    "HAAR": np.array([_SQRT_HALF, _SQRT_HALF]),
    "DB4": np.array([
        -0.010597401785069032, 0.0328830116668852, 0.030841381835560764,
        -0.18703481171909309, -0.027983769416859854, 0.6308807679298589,
        0.7148465705529157, 0.2303778133088965,
    ]),
}


def highpass(h: np.ndarray) -> np.ndarray:
    L = h.size
    return np.array([(-1) ** k * h[L - 1 - k] for k in range(L)])


def _one_level(n: int, h: np.ndarray) -> np.ndarray:
    g = highpass(h)
    half = n // 2
    M = np.zeros((n, n))
    for k in range(half):
        for t in range(h.size):
            M[k, (2 * k + t) % n] += h[t]
            M[half + k, (2 * k + t) % n] += g[t]
    return M


@lru_cache(maxsize=64)
def _analysis_matrix_cached(n: int, wavelet: str) -> np.ndarray:
    h = FILTERS[wavelet]
    W = np.eye(n)
    size = n
    while size > 1:
        step = np.eye(n)
        step[:size, :size] = _one_level(size, h)
        W = step @ W
        size //= 2
    W.setflags(write=False)
    return W


def analysis_matrix(n: int, wavelet: str = "HAAR") -> np.ndarray:
    """Orthonormal ``n x n`` matrix of the full-depth periodized DWT."""
    wavelet = wavelet.upper()
    if wavelet not in FILTERS:
        raise ValueError(f"unknown wavelet {wavelet!r}")
    if n < 1 or n & (n - 1):
        raise ValueError(f"transform length must be a power of two, got {n}")
    return _analysis_matrix_cached(n, wavelet)


def dwt2(X: np.ndarray, wavelet: str) -> np.ndarray:
    m, n = X.shape
    return analysis_matrix(m, wavelet) @ X @ analysis_matrix(n, wavelet).T


def idwt2(C: np.ndarray, wavelet: str) -> np.ndarray:
    m, n = C.shape
    return analysis_matrix(m, wavelet).T @ C @ analysis_matrix(n, wavelet)


def pad_symmetric(X: np.ndarray) -> np.ndarray:
    M, N = padded_shape(X.shape)
    return np.pad(X, ((0, M - X.shape[0]), (0, N - X.shape[1])), mode="symmetric")


def project_dwt(lattice: LatticePolicy, K: int, wavelet: str = "HAAR") -> SpectralEmbedding:
    """Keep the ``K`` largest-magnitude wavelet coefficients of the padded lattice."""
    wavelet = wavelet.upper()
    padded = pad_symmetric(np.asarray(lattice.probs))
    total = padded.size
    if not 1 <= K <= total:
        raise ValueError(f"K must lie in [1, {total}], got {K}")
    C = dwt2(padded, wavelet).ravel()
    order = np.lexsort((np.arange(total), -np.abs(C)))
    keep = np.sort(order[:K])
    coeffs = {"index": keep, "value": C[keep]}
    return SpectralEmbedding(wavelet, K, lattice.shape, coeffs, lattice.state_bins, lattice.action_bins)


def inverse_dwt(emb: SpectralEmbedding) -> np.ndarray:
    M, N = padded_shape(emb.shape)
    C = np.zeros(M * N)
    C[np.asarray(emb["index"], dtype=np.int64)] = emb["value"]
    X = idwt2(C.reshape(M, N), emb.basis)
    return X[: emb.shape[0], : emb.shape[1]]
