"""Projection of lattice policies onto truncated bases, and related bounds."""

from .bounds import (
    RkhsSpectrum,
    bandit_return_bound,
    geometric_rate,
    rkhs_distance_sq,
    tail_bound,
    truncation_return_bound,
)
from .dft import n_components, project_dft
from .embedding import BASES, SpectralEmbedding, count_parameters, load_embedding, save_embedding
from .estimator import SpectralEmbedder, project
from .gmm import fit_fixed_basis_gmm, fit_gmm, mixture_density
from .reconstruct import inverse_transform, parameter_count, reconstruct
from .svd import project_svd
from .wavelets import project_dwt

__all__ = [
    "BASES",
    "SpectralEmbedding",
    "SpectralEmbedder",
    "RkhsSpectrum",
    "project",
    "project_dft",
    "project_dwt",
    "project_svd",
    "fit_gmm",
    "fit_fixed_basis_gmm",
    "mixture_density",
    "reconstruct",
    "inverse_transform",
    "parameter_count",
    "count_parameters",
    "n_components",
    "save_embedding",
    "load_embedding",
    "rkhs_distance_sq",
    "tail_bound",
    "geometric_rate",
    "truncation_return_bound",
    "bandit_return_bound",
]
