"""Truncation of a lattice in the two-dimensional discrete Fourier basis.

The transform is unitary (``norm="ortho"``) so coefficient magnitudes and
Frobenius errors are directly comparable.  A real lattice has a
conjugate-symmetric spectrum; each conjugate pair (or self-conjugate
coefficient) is one component and is kept or dropped as a unit.
"""

from __future__ import annotations

import numpy as np

from ..lattice import LatticePolicy
from .embedding import SpectralEmbedding


def conjugate_partner(shape) -> np.ndarray:
    """Flat index of the conjugate partner of every coefficient."""
    m, n = shape
    u, v = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    return (((-u) % m) * n + ((-v) % n)).ravel()


def representatives(shape) -> np.ndarray:
    """Sorted flat indices that stand for one conjugate orbit each."""
    flat = np.arange(shape[0] * shape[1])
    return flat[flat <= conjugate_partner(shape)]


def n_components(shape) -> int:
    return representatives(shape).size


def rank_components(spectrum: np.ndarray) -> np.ndarray:
    """Representatives ordered by decreasing magnitude, ties by index."""
    reps = representatives(spectrum.shape)
    mags = np.abs(spectrum.ravel()[reps])
    return reps[np.lexsort((reps, -mags))]


def project_dft(lattice: LatticePolicy, K: int) -> SpectralEmbedding:
    """Keep the ``K`` largest Fourier components of ``lattice.probs``.

    ``K`` may be as large as ``b_S * b_A``; requests beyond the number of
    conjugate orbits keep the full spectrum.
    """
    m, n = lattice.shape
    if not 1 <= K <= m * n:
        raise ValueError(f"K must lie in [1, {m * n}], got {K}")
    spectrum = np.fft.fft2(lattice.probs, norm="ortho")
    order = rank_components(spectrum)
    keep = np.sort(order[: min(K, order.size)])
    coeffs = {"index": keep, "value": spectrum.ravel()[keep]}
    return SpectralEmbedding("DFT", keep.size, (m, n), coeffs, lattice.state_bins, lattice.action_bins)


def inverse_dft(emb: SpectralEmbedding) -> np.ndarray:
    m, n = emb.shape
    spectrum = np.zeros(m * n, dtype=complex)
    idx = np.asarray(emb["index"], dtype=np.int64)
    val = np.asarray(emb["value"], dtype=complex)
    partner = conjugate_partner((m, n))[idx]
    spectrum[partner] = np.conj(val)
    spectrum[idx] = val
    return np.fft.ifft2(spectrum.reshape(m, n), norm="ortho").real
