"""Rank-K truncated singular value decomposition of a lattice."""

from __future__ import annotations

import numpy as np

from ..lattice import LatticePolicy
from .embedding import SpectralEmbedding


def project_svd(lattice: LatticePolicy, K: int) -> SpectralEmbedding:
    """Best rank-``K`` approximation in Frobenius norm (Eckart-Young)."""
    m, n = lattice.shape
    if not 1 <= K <= min(m, n):
        raise ValueError(f"K must lie in [1, {min(m, n)}], got {K}")
    U, s, Vt = np.linalg.svd(np.asarray(lattice.probs), full_matrices=False)
    coeffs = {"U": U[:, :K], "s": s[:K], "Vt": Vt[:K]}
    return SpectralEmbedding("SVD", K, (m, n), coeffs, lattice.state_bins, lattice.action_bins)


def inverse_svd(emb: SpectralEmbedding) -> np.ndarray:
    return (emb["U"] * emb["s"]) @ emb["Vt"]


def singular_values(lattice: LatticePolicy) -> np.ndarray:
    return np.linalg.svd(np.asarray(lattice.probs), compute_uv=False)
