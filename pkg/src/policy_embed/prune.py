"""Visitation-based pruning of lattice policies and its high-probability bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .lattice import BinEdges, LatticePolicy, StateBins, VisitationStats


@dataclass(frozen=True)
class PrunedPolicy:
    """A lattice that answers uniformly on state bins outside ``visited_mask``."""

    base: LatticePolicy
    visited_mask: np.ndarray
    pruned_fraction: float

    def __post_init__(self):
        mask = np.asarray(self.visited_mask, dtype=bool).copy()
        mask.setflags(write=False)
        if mask.shape != (self.base.b_S,):
            raise ValueError("visited_mask must have one entry per state bin")
        unvisited = self.base.probs[~mask]
        if not np.allclose(unvisited, 1.0 / self.base.b_A, rtol=0, atol=1e-15):
            raise ValueError("unvisited rows must be uniform")
        object.__setattr__(self, "visited_mask", mask)
        object.__setattr__(self, "pruned_fraction", float(self.pruned_fraction))

    @property
    def n_pruned(self) -> int:
        return int((~self.visited_mask).sum())

    @property
    def n_kept_parameters(self) -> int:
        return int(self.visited_mask.sum()) * self.base.b_A


def _visited(stats: VisitationStats, threshold: float) -> np.ndarray:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return stats.rho > threshold


def prune_policy(
    counts: VisitationStats,
    b_A: int,
    threshold: float = 0.0,
    state_bins: StateBins | None = None,
    action_bins: BinEdges | None = None,
) -> PrunedPolicy:
    """Empirical-frequency policy on visited state bins, uniform elsewhere.

    A state bin counts as visited when its occupancy exceeds ``threshold``;
    visited rows are ``N(s, a) / sum_a N(s, a)``.
    """
    table = counts.counts
    if table.shape[1] != b_A:
        raise ValueError(f"counts have {table.shape[1]} action columns, expected b_A={b_A}")
    visited = _visited(counts, threshold)
    probs = np.full(table.shape, 1.0 / b_A)
    totals = table[visited].sum(axis=1, keepdims=True)
    probs[visited] = table[visited] / totals
    base = LatticePolicy(probs, state_bins, action_bins)
    return PrunedPolicy(base, visited, float((~visited).mean()))


def prune_lattice(lattice: LatticePolicy, stats: VisitationStats, threshold: float = 0.0) -> PrunedPolicy:
    """Keep the lattice rows of visited state bins and make the rest uniform."""
    if stats.counts.shape != lattice.shape:
        raise ValueError(
            f"visitation table {stats.counts.shape} does not match lattice {lattice.shape}"
        )
    visited = _visited(stats, threshold)
    probs = np.array(lattice.probs)
    probs[~visited] = 1.0 / lattice.b_A
    base = lattice.with_probs(probs)
    return PrunedPolicy(base, visited, float((~visited).mean()))


def pruning_bound(N: int, r_max: float, gamma: float, n_states: int, n_actions: int, delta: float) -> float:
    """Return-gap bound of the pruned policy holding with probability ``1 - 2 delta``.

    ``2 r_max / (1 - gamma) * sqrt((3 |S| |A| + 4 ln(1/delta)) / (2 N))``
    """
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    if N < 1 or n_states < 1 or n_actions < 1:
        raise ValueError("N, n_states and n_actions must be positive")
    if r_max < 0:
        raise ValueError("r_max must be nonnegative")
    radicand = (3 * n_states * n_actions + 4 * math.log(1 / delta)) / (2 * N)
    return 2 * r_max / (1 - gamma) * math.sqrt(radicand)


def pruned_fraction_report(p: PrunedPolicy) -> float:
    return p.pruned_fraction


class VisitationPruner(TransformerMixin, BaseEstimator):
    """Fit on visitation statistics, then prune lattices with the same shape.

    With ``mode="frequency"`` the fitted counts themselves become the visited
    rows; ``mode="keep"`` keeps the rows of the transformed lattice.
    """

    def __init__(self, threshold=0.0, mode="keep"):
        self.threshold = threshold
        self.mode = mode

    def fit(self, X: VisitationStats, y=None):
        if not isinstance(X, VisitationStats):
            raise TypeError("VisitationPruner.fit expects VisitationStats")
        self.stats_ = X
        self.visited_mask_ = _visited(X, self.threshold)
        return self

    def transform(self, X: LatticePolicy) -> PrunedPolicy:
        check_is_fitted(self, "stats_")
        if self.mode == "keep":
            return prune_lattice(X, self.stats_, self.threshold)
        if self.mode == "frequency":
            return prune_policy(self.stats_, X.b_A, self.threshold, X.state_bins, X.action_bins)
        raise ValueError(f"unknown mode {self.mode!r}")


__all__ = [
    "PrunedPolicy",
    "prune_policy",
    "prune_lattice",
    "pruning_bound",
    "pruned_fraction_report",
    "VisitationPruner",
]
