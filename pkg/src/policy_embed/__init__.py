"""Compress reinforcement-learning policies by truncated basis expansions of lattice tables."""

from .lattice import (
    BinEdges,
    LatticeFormatError,
    LatticePolicy,
    ProductBins,
    Trajectory,
    VisitationStats,
    load_lattice,
    load_visitation,
    save_lattice,
    save_visitation,
)
from .markov import PolicyMatrix, TabularMDP, policy_evaluation
from .prune import PrunedPolicy, VisitationPruner, prune_lattice, prune_policy, pruning_bound
from .quantize import QuantileBinner, discretize_policy, fit_quantile_bins
from .spectral import SpectralEmbedder, SpectralEmbedding, project, reconstruct

__version__ = "0.1.0"

__all__ = [
    "BinEdges",
    "ProductBins",
    "LatticePolicy",
    "LatticeFormatError",
    "Trajectory",
    "VisitationStats",
    "PrunedPolicy",
    "PolicyMatrix",
    "TabularMDP",
    "SpectralEmbedding",
    "QuantileBinner",
    "VisitationPruner",
    "SpectralEmbedder",
    "discretize_policy",
    "fit_quantile_bins",
    "load_lattice",
    "load_visitation",
    "policy_evaluation",
    "project",
    "prune_lattice",
    "prune_policy",
    "pruning_bound",
    "reconstruct",
    "save_lattice",
    "save_visitation",
]
