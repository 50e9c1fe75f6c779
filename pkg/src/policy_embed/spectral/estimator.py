from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..lattice import LatticePolicy
from .dft import project_dft
from .embedding import SpectralEmbedding
from .reconstruct import reconstruct
from .svd import project_svd
from .wavelets import project_dwt


def project(lattice: LatticePolicy, basis: str, K: int) -> SpectralEmbedding:
    """Dispatch to the projection of one of the lattice bases."""
    basis = basis.upper()
    if basis == "DFT":
        return project_dft(lattice, K)
    if basis in ("HAAR", "DB4"):
        return project_dwt(lattice, K, basis)
    if basis == "SVD":
        return project_svd(lattice, K)
    raise ValueError(f"basis {basis!r} does not project lattices (GMM fits samples)")


class SpectralEmbedder(TransformerMixin, BaseEstimator):
    """Truncate lattice policies to ``n_components`` terms of a basis.

    ``transform`` returns the :class:`SpectralEmbedding`;
    ``inverse_transform`` maps it back to a repaired :class:`LatticePolicy`.

    Examples
    --------
    >>> from policy_embed import LatticePolicy
    >>> emb = SpectralEmbedder(basis="dft", n_components=1)
    >>> pi = emb.fit_transform(LatticePolicy([[0.9, 0.1], [0.2, 0.8]]))
    >>> emb.inverse_transform(pi).probs.tolist()
    [[0.5, 0.5], [0.5, 0.5]]
    """

    def __init__(self, basis="dft", n_components=10):
        self.basis = basis
        self.n_components = n_components

    def fit(self, X: LatticePolicy, y=None):
        self.embedding_ = project(X, self.basis, self.n_components)
        self.shape_ = X.shape
        return self

    def transform(self, X: LatticePolicy) -> SpectralEmbedding:
        check_is_fitted(self, "embedding_")
        if X.shape != self.shape_:
            raise ValueError(f"lattice shape {X.shape} differs from fitted {self.shape_}")
        return project(X, self.basis, self.n_components)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).embedding_

    def inverse_transform(self, X: SpectralEmbedding) -> LatticePolicy:
        return reconstruct(X)
