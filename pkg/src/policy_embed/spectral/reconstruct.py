"""Inverse transforms and policy repair for every basis."""

from __future__ import annotations

import numpy as np

from ..lattice import LatticePolicy, normalize_rows
from .dft import inverse_dft
from .embedding import SpectralEmbedding, count_parameters
from .gmm import gmm_table
from .svd import inverse_svd
from .wavelets import inverse_dwt

_INVERSE = {
    "DFT": inverse_dft,
    "HAAR": inverse_dwt,
    "DB4": inverse_dwt,
    "SVD": inverse_svd,
    "GMM": gmm_table,
}


def inverse_transform(embedding: SpectralEmbedding) -> np.ndarray:
    """Raw truncated table, before clipping or renormalization."""
    return np.asarray(_INVERSE[embedding.basis](embedding), dtype=float)


def reconstruct(embedding: SpectralEmbedding) -> LatticePolicy:
    """Inverse transform repaired into a valid policy.

    Negative entries are clipped to zero and rows renormalized; rows with no
    mass left become uniform.
    """
    table = np.clip(inverse_transform(embedding), 0.0, None)
    probs, empty = normalize_rows(table)
    return LatticePolicy(probs, embedding.state_bins, embedding.action_bins, uniform_rows=empty)


def parameter_count(embedding: SpectralEmbedding) -> int:
    return count_parameters(embedding.basis, embedding.K, embedding.shape)
