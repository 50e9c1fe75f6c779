"""Quantile binning of rollout samples and projection of policies onto lattices."""

from __future__ import annotations

from typing import Callable, Protocol, Sequence, Union, runtime_checkable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .lattice import (
    BinEdges,
    LatticePolicy,
    ProductBins,
    StateBins,
    as_state_bins,
    normalize_rows,
    state_midpoints,
)


@runtime_checkable
class PolicyOracle(Protocol):
    """A continuous policy that can be evaluated and sampled."""

    def density(self, state, action) -> float: ...

    def sample(self, state, rng: np.random.Generator) -> float: ...


class EmpiricalCdf:
    """Right-continuous empirical CDF of a sample with the ``inf`` quantile rule.

    ``quantile(p)`` returns ``inf{x : p <= F(x)}``, i.e. an order statistic,
    never an interpolated value.
    """

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("EmpiricalCdf needs at least one sample")
        if not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        self.values = values
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.values, x, side="right") / self.n

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise ValueError("quantile level must lie in [0, 1]")
        # smallest k with k/n >= p, guarded against p*n landing a hair above an integer
        k = np.ceil(p * self.n - 1e-9 * self.n).astype(int)
        return self.values[np.clip(k - 1, 0, self.n - 1)]

    def quantile_fraction(self, num: int, den: int) -> float:
        """Exact ``quantile(num / den)`` using integer arithmetic."""
        k = -((-num * self.n) // den)
        return float(self.values[max(k - 1, 0)])

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the step CDF over ``[a, b]``."""
        if b < a:
            raise ValueError("integration bounds reversed")
        inside = self.values[(self.values > a) & (self.values < b)]
        knots = np.concatenate(([a], inside, [b]))
        levels = self(knots[:-1])
        return float(np.sum(levels * np.diff(knots)))


def fit_quantile_bins(samples, b: int) -> BinEdges:
    """Edges at the empirical quantiles ``Q(l/b)``, ``l = 1..b-1``.

    The outer edges are the sample minimum and maximum.  Raises when ties
    collapse two edges onto the same value.
    """
    if int(b) != b or b < 1:
        raise ValueError(f"number of bins must be a positive integer, got {b!r}")
    b = int(b)
    cdf = EmpiricalCdf(samples)
    n_distinct = np.unique(cdf.values).size
    if n_distinct <= b:
        # Q(1/b) is the sample minimum unless more than b distinct values exist
        raise ValueError(
            f"cannot form {b} quantile bins from {n_distinct} distinct values: "
            f"at least {b + 1} are needed; duplicate samples collapse neighbouring edges"
        )
    interior = [cdf.quantile_fraction(l, b) for l in range(1, b)]
    edges = np.concatenate(([cdf.values[0]], interior, [cdf.values[-1]]))
    if np.any(np.diff(edges) <= 0):
        dup = int(np.flatnonzero(np.diff(edges) <= 0)[0])
        raise ValueError(
            f"quantile edges {dup} and {dup + 1} collapse to {edges[dup]!r}: "
            "too many duplicate samples for the requested bin count"
        )
    return BinEdges(edges)


def fit_uniform_bins(samples, b: int) -> BinEdges:
    samples = np.asarray(samples, dtype=float)
    lo, hi = float(samples.min()), float(samples.max())
    if hi <= lo:
        raise ValueError("uniform bins need a non-degenerate sample range")
    return BinEdges.uniform(lo, hi, int(b))


class QuantileBinner(TransformerMixin, BaseEstimator):
    """Per-coordinate binning of samples, in the style of ``KBinsDiscretizer``.

    Parameters
    ----------
    n_bins : int or sequence of int
        Bins per coordinate.
    strategy : {"quantile", "uniform"}
        Quantile edges follow the ``inf`` quantile rule with no interpolation.

    Attributes
    ----------
    bin_edges_ : list of BinEdges
    bins_ : BinEdges or ProductBins
        The joint binning; a single coordinate gives a plain ``BinEdges``.
    """

    def __init__(self, n_bins=10, strategy="quantile"):
        self.n_bins = n_bins
        self.strategy = strategy

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        n_bins = np.broadcast_to(np.asarray(self.n_bins, dtype=int), (X.shape[1],))
        if self.strategy == "quantile":
            fit = fit_quantile_bins
        elif self.strategy == "uniform":
            fit = fit_uniform_bins
        else:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        self.bin_edges_ = [fit(X[:, k], int(n_bins[k])) for k in range(X.shape[1])]
        self.bins_ = as_state_bins(self.bin_edges_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Ordinal bin index per coordinate."""
        check_is_fitted(self, "bin_edges_")
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return np.column_stack([e.bin_index(X[:, k]) for k, e in enumerate(self.bin_edges_)])

    def cell_index(self, X):
        """Flat cell index (rows of a lattice policy)."""
        check_is_fitted(self, "bin_edges_")
        X = np.asarray(X, dtype=float)
        if isinstance(self.bins_, BinEdges):
            return self.bins_.bin_index(X.ravel() if X.ndim > 1 else X)
        return self.bins_.bin_index(X)

    def inverse_transform(self, Xt):
        """Bin midpoints for ordinal indices."""
        check_is_fitted(self, "bin_edges_")
        Xt = np.atleast_2d(np.asarray(Xt, dtype=int))
        return np.column_stack([e.midpoints[Xt[:, k]] for k, e in enumerate(self.bin_edges_)])


def density_table(oracle, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Evaluate ``oracle`` on every (state, action) pair.

    Uses ``oracle.density_table`` when the oracle offers a vectorized form.
    """
    batch = getattr(oracle, "density_table", None)
    if batch is not None:
        return np.asarray(batch(states, actions), dtype=float)
    out = np.empty((len(states), len(actions)))
    for i, s in enumerate(states):
        s_arg = s[0] if s.shape == (1,) else s
        for j, a in enumerate(actions):
            out[i, j] = oracle.density(s_arg, a)
    return out


def discretize_policy(oracle, state_bins: StateBins, action_bins: BinEdges) -> LatticePolicy:
    """Lattice with ``probs[l, l'] ∝ density(midpoint_S(l), midpoint_A(l'))``.

    Rows are renormalized; rows where every density vanishes become uniform
    and are listed in ``uniform_rows``.
    """
    states = state_midpoints(state_bins)
    actions = action_bins.midpoints
    table = density_table(oracle, states, actions)
    if table.shape != (state_bins.b, action_bins.b):
        raise ValueError(f"density table has shape {table.shape}")
    bad = ~np.isfinite(table)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"density is not finite at state bin {i} (midpoint {states[i].tolist()}), "
            f"action bin {j} (midpoint {actions[j]!r})"
        )
    if np.any(table < 0):
        i, j = np.argwhere(table < 0)[0]
        raise ValueError(f"density is negative at state bin {i}, action bin {j}")
    probs, empty = normalize_rows(table)
    return LatticePolicy(probs, state_bins, action_bins, uniform_rows=empty)


def conditional_action_bins(states, actions, state_bins: BinEdges, b_A: int) -> list:
    """Quantile action bins fitted separately on the actions of each state bin."""
    idx = state_bins.bin_index(np.asarray(states, dtype=float).ravel())
    actions = np.asarray(actions, dtype=float).ravel()
    return [fit_quantile_bins(actions[idx == i], b_A) for i in range(state_bins.b)]


CdfLike = Union[EmpiricalCdf, Callable]


def _cdf_integral(cdf: CdfLike, a: float, b: float, n_points: int) -> float:
    if isinstance(cdf, EmpiricalCdf):
        return cdf.integral(a, b)
    x = np.linspace(a, b, n_points)
    return float(np.trapezoid(np.asarray(cdf(x), dtype=float), x))


def _step_defects(cdf: CdfLike, bins: BinEdges, n_points: int) -> np.ndarray:
    b = bins.b
    e = bins.edges
    return np.array([
        abs(_cdf_integral(cdf, e[i], e[i + 1], n_points) - (i + 1) / b * (e[i + 1] - e[i]))
        for i in range(b)
    ])


def discretization_error_volume(
    state_cdf: CdfLike,
    conditional_action_cdfs: Sequence[CdfLike],
    state_bins: BinEdges,
    action_bins_per_state_bin: Sequence[BinEdges],
    n_points: int = 1000,
) -> float:
    """Volume of the error between CDFs and their quantile step approximations.

    For state bin ``i`` and action bin ``j`` (conditional on ``i``) the error
    rectangle is the product of ``|∫ F_S - (i/b_S) width_i|`` and
    ``|∫ F_A|i - (j/b_A) width_ij|``; the volume is their sum.

    Empirical CDFs are integrated exactly (they are step functions); other
    callables use the composite trapezoid rule with ``n_points`` per bin.
    """
    if n_points < 1000:
        raise ValueError("use at least 1000 quadrature points per bin")
    if len(conditional_action_cdfs) != state_bins.b or len(action_bins_per_state_bin) != state_bins.b:
        raise ValueError(
            f"need one action CDF and one action binning per state bin ({state_bins.b}), got "
            f"{len(conditional_action_cdfs)} and {len(action_bins_per_state_bin)}"
        )
    state_defect = _step_defects(state_cdf, state_bins, n_points)
    total = 0.0
    for i, (cdf_a, bins_a) in enumerate(zip(conditional_action_cdfs, action_bins_per_state_bin)):
        total += state_defect[i] * _step_defects(cdf_a, bins_a, n_points).sum()
    return float(total)


__all__ = [
    "PolicyOracle",
    "EmpiricalCdf",
    "fit_quantile_bins",
    "fit_uniform_bins",
    "QuantileBinner",
    "density_table",
    "discretize_policy",
    "conditional_action_bins",
    "discretization_error_volume",
    "ProductBins",
]
