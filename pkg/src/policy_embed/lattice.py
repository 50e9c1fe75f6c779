"""Domain types for discretized policies and their text serialization.

A lattice policy is a row-stochastic ``b_S x b_A`` table: one conditional
action pmf per state bin.  States may be binned per coordinate
(:class:`ProductBins`), in which case the rows enumerate the product cells
in C order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

ROW_TOL = 1e-9
LOAD_REPAIR_TOL = 1e-6


class LatticeFormatError(ValueError):
    """Raised when a lattice or visitation file cannot be parsed."""


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BinEdges:
    """Strictly increasing edges of ``b`` contiguous bins on one coordinate.

    Bin 0 is ``[edges[0], edges[1]]``; bin ``i > 0`` is ``(edges[i], edges[i+1]]``.
    Values outside ``[edges[0], edges[-1]]`` are clamped to the end bins.
    """

    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float).ravel()
        if edges.size < 2:
            raise ValueError("BinEdges needs at least two edges (b >= 1)")
        if not np.all(np.isfinite(edges)):
            raise ValueError("bin edges must be finite")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", _frozen(edges))

    @classmethod
    def uniform(cls, low: float, high: float, b: int) -> "BinEdges":
        return cls(np.linspace(low, high, b + 1))

    @classmethod
    def index(cls, b: int) -> "BinEdges":
        """Edges ``0, 1, ..., b``; used when only bin identities matter."""
        return cls(np.arange(b + 1, dtype=float))

    @property
    def b(self) -> int:
        return self.edges.size - 1

    @property
    def n_dims(self) -> int:
        return 1

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def midpoint(self, i: int) -> float:
        return float(0.5 * (self.edges[i] + self.edges[i + 1]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def bin_index(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        idx = np.searchsorted(self.edges[1:-1], values, side="left")
        return np.clip(idx, 0, self.b - 1)

    def __eq__(self, other):
        return isinstance(other, BinEdges) and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash(self.edges.tobytes())

    def __repr__(self):
        return f"BinEdges(b={self.b}, range=[{self.edges[0]:g}, {self.edges[-1]:g}])"


@dataclass(frozen=True, eq=False)
class ProductBins:
    """Per-coordinate binning of vector states; cells are numbered in C order."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        if not dims or not all(isinstance(d, BinEdges) for d in dims):
            raise ValueError("ProductBins needs one BinEdges per state coordinate")
        object.__setattr__(self, "dims", dims)

    @property
    def b(self) -> int:
        return int(np.prod([d.b for d in self.dims]))

    @property
    def n_dims(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple:
        return tuple(d.b for d in self.dims)

    @property
    def midpoints(self) -> np.ndarray:
        """Cell centres, shape ``(b, n_dims)``."""
        grids = np.meshgrid(*[d.midpoints for d in self.dims], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def bin_index(self, states) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.n_dims:
            raise ValueError(
                f"states have {states.shape[1]} coordinates, bins expect {self.n_dims}"
            )
        per_dim = [d.bin_index(states[:, k]) for k, d in enumerate(self.dims)]
        return np.ravel_multi_index(per_dim, self.shape)

    def __eq__(self, other):
        return isinstance(other, ProductBins) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)


StateBins = Union[BinEdges, ProductBins]


def state_midpoints(bins: StateBins) -> np.ndarray:
    """Bin centres as an ``(b, n_dims)`` array for either bin type."""
    if isinstance(bins, BinEdges):
        return bins.midpoints[:, None]
    return bins.midpoints


@dataclass(frozen=True, eq=False)
class LatticePolicy:
    """Row-stochastic ``b_S x b_A`` table of conditional action probabilities.

    ``renormalized`` is set when a loader repaired a row sum drift;
    ``uniform_rows`` lists rows that fell back to the uniform pmf.
    """

    probs: np.ndarray
    state_bins: StateBins = None
    action_bins: BinEdges = None
    renormalized: bool = False
    uniform_rows: tuple = field(default=())

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or min(probs.shape) < 1:
            raise ValueError(f"probs must be a non-empty 2-D table, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise ValueError("lattice contains NaN or infinite entries")
        if np.any(probs < 0):
            raise ValueError("lattice contains negative probabilities")
        dev = np.abs(probs.sum(axis=1) - 1.0)
        if np.any(dev > ROW_TOL):
            bad = int(np.argmax(dev))
            raise ValueError(f"row {bad} sums to {probs[bad].sum()!r}, not 1")
        b_S, b_A = probs.shape
        state_bins = self.state_bins if self.state_bins is not None else BinEdges.index(b_S)
        action_bins = self.action_bins if self.action_bins is not None else BinEdges.index(b_A)
        if state_bins.b != b_S or action_bins.b != b_A:
            raise ValueError(
                f"table shape {probs.shape} does not match bins ({state_bins.b}, {action_bins.b})"
            )
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "state_bins", state_bins)
        object.__setattr__(self, "action_bins", action_bins)
        object.__setattr__(self, "uniform_rows", tuple(int(r) for r in self.uniform_rows))

    @property
    def b_S(self) -> int:
        return self.probs.shape[0]

    @property
    def b_A(self) -> int:
        return self.probs.shape[1]

    @property
    def shape(self) -> tuple:
        return self.probs.shape

    @classmethod
    def uniform(cls, state_bins: StateBins, action_bins: BinEdges) -> "LatticePolicy":
        probs = np.full((state_bins.b, action_bins.b), 1.0 / action_bins.b)
        return cls(probs, state_bins, action_bins)

    def with_probs(self, probs, **kwargs) -> "LatticePolicy":
        """Same bin structure, new table."""
        return LatticePolicy(probs, self.state_bins, self.action_bins, **kwargs)

    def __eq__(self, other):
        return (
            isinstance(other, LatticePolicy)
            and self.state_bins == other.state_bins
            and self.action_bins == other.action_bins
            and np.array_equal(self.probs, other.probs)
        )

    def __repr__(self):
        return f"LatticePolicy(b_S={self.b_S}, b_A={self.b_A})"


@dataclass(frozen=True, eq=False)
class VisitationStats:
    """Empirical state-bin occupancy ``rho`` and action counts ``N(s, a)``."""

    rho: np.ndarray
    counts: np.ndarray
    n_trajectories: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValueError("counts must be a b_S x b_A table")
        if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
            raise ValueError("counts must be nonnegative integers")
        counts = counts.astype(np.int64)
        rho = np.asarray(self.rho, dtype=float).ravel()
        if rho.shape[0] != counts.shape[0]:
            raise ValueError("rho length does not match the number of count rows")
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > ROW_TOL:
            raise ValueError("rho must be a probability vector")
        if np.any((rho == 0) != (counts.sum(axis=1) == 0)):
            raise ValueError("rho[s] must be zero exactly when row s of counts is empty")
        if int(self.n_trajectories) < 1:
            raise ValueError("n_trajectories must be positive")
        object.__setattr__(self, "rho", _frozen(rho))
        object.__setattr__(self, "counts", _frozen(counts, dtype=np.int64))
        object.__setattr__(self, "n_trajectories", int(self.n_trajectories))

    @classmethod
    def from_indices(cls, state_idx, action_idx, b_S: int, b_A: int, n_trajectories: int):
        counts = np.zeros((b_S, b_A), dtype=np.int64)
        np.add.at(counts, (np.asarray(state_idx, dtype=int), np.asarray(action_idx, dtype=int)), 1)
        total = counts.sum()
        if total == 0:
            raise ValueError("no visits recorded")
        return cls(counts.sum(axis=1) / total, counts, n_trajectories)

    @property
    def n_steps(self) -> int:
        return int(self.counts.sum())

    @property
    def visited(self) -> np.ndarray:
        return self.counts.sum(axis=1) > 0

    def __eq__(self, other):
        return (
            isinstance(other, VisitationStats)
            and self.n_trajectories == other.n_trajectories
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Raw states, actions and rewards of one episode."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        actions = np.asarray(self.actions, dtype=float).ravel()
        rewards = np.asarray(self.rewards, dtype=float).ravel()
        if not (len(states) == len(actions) == len(rewards)):
            raise ValueError("states, actions and rewards must have equal length")
        for name, arr in (("states", states), ("actions", actions), ("rewards", rewards)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"trajectory {name} contain non-finite values")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "actions", _frozen(actions))
        object.__setattr__(self, "rewards", _frozen(rewards))

    def __len__(self):
        return len(self.rewards)

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())


# -- serialization -----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _format_state_edges(bins: StateBins) -> str:
    if isinstance(bins, BinEdges):
        return _fmt_row(bins.edges)
    return " | ".join(_fmt_row(d.edges) for d in bins.dims)


def save_lattice(policy: LatticePolicy, path) -> None:
    """Write ``policy`` as text; reloading with :func:`load_lattice` is exact.

    Layout: ``b_S b_A``, the state edges (coordinates separated by ``|`` for
    product bins), the action edges, then one line of ``b_A`` probabilities
    per state bin.
    """
    if not np.all(np.isfinite(policy.probs)):
        raise ValueError("refusing to save a lattice with NaN entries")
    lines = [
        f"{policy.b_S} {policy.b_A}",
        _format_state_edges(policy.state_bins),
        _fmt_row(policy.action_bins.edges),
    ]
    lines.extend(_fmt_row(row) for row in policy.probs)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _content_lines(text: str) -> list:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _parse_floats(line: str, where: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in line.split()], dtype=float)
    except ValueError as exc:
        raise LatticeFormatError(f"{where}: {exc}") from None


def load_lattice(path) -> LatticePolicy:
    """Read a lattice file.

    Rows whose sum is off by more than ``1e-6`` are rejected; smaller drifts
    above ``1e-9`` are renormalized and ``renormalized`` is set on the result.
    """
    lines = _content_lines(Path(path).read_text(encoding="utf-8"))
    if len(lines) < 3:
        raise LatticeFormatError(f"{path}: expected header, edges and table rows")
    header = lines[0].split()
    if len(header) != 2:
        raise LatticeFormatError(f"{path}: header must be 'b_S b_A'")
    try:
        b_S, b_A = int(header[0]), int(header[1])
    except ValueError:
        raise LatticeFormatError(f"{path}: header must hold two integers") from None
    try:
        if "|" in lines[1]:
            dims = tuple(BinEdges(_parse_floats(part, f"{path}: state edges"))
                         for part in lines[1].split("|"))
            state_bins: StateBins = ProductBins(dims)
        else:
            state_bins = BinEdges(_parse_floats(lines[1], f"{path}: state edges"))
        action_bins = BinEdges(_parse_floats(lines[2], f"{path}: action edges"))
    except LatticeFormatError:
        raise
    except ValueError as exc:
        raise LatticeFormatError(f"{path}: bad edges ({exc})") from None
    if state_bins.b != b_S or action_bins.b != b_A:
        raise LatticeFormatError(f"{path}: edges do not match header {b_S} {b_A}")
    rows = lines[3:]
    if len(rows) != b_S:
        raise LatticeFormatError(f"{path}: expected {b_S} table rows, found {len(rows)}")
    probs = np.empty((b_S, b_A))
    for i, line in enumerate(rows):
        vals = _parse_floats(line, f"{path}: row {i}")
        if vals.size != b_A:
            raise LatticeFormatError(f"{path}: row {i} has {vals.size} entries, expected {b_A}")
        probs[i] = vals
    if not np.all(np.isfinite(probs)):
        raise LatticeFormatError(f"{path}: table contains NaN or infinite entries")
    if np.any(probs < 0):
        raise LatticeFormatError(f"{path}: table contains negative entries")
    dev = np.abs(probs.sum(axis=1) - 1.0)
    if np.any(dev > LOAD_REPAIR_TOL):
        bad = int(np.argmax(dev))
        raise LatticeFormatError(f"{path}: row {bad} sums to {probs[bad].sum()!r}")
    repaired = bool(np.any(dev > ROW_TOL))
    if repaired:
        warnings.warn(f"{path}: renormalized rows with sum drift up to {dev.max():.3g}")
        fix = dev > ROW_TOL
        probs[fix] /= probs[fix].sum(axis=1, keepdims=True)
    return LatticePolicy(probs, state_bins, action_bins, renormalized=repaired)


def save_visitation(stats: VisitationStats, path) -> None:
    """Write visitation counts: ``b_S b_A n_trajectories`` then the count rows."""
    b_S, b_A = stats.counts.shape
    lines = [f"{b_S} {b_A} {stats.n_trajectories}"]
    lines.extend(" ".join(str(int(c)) for c in row) for row in stats.counts)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_visitation(path) -> VisitationStats:
    lines = _content_lines(Path(path).read_text(encoding="utf-8"))
    try:
        b_S, b_A, n_traj = (int(t) for t in lines[0].split())
        counts = np.array([[int(t) for t in line.split()] for line in lines[1:]], dtype=np.int64)
    except (ValueError, IndexError):
        raise LatticeFormatError(f"{path}: malformed visitation file") from None
    if counts.shape != (b_S, b_A):
        raise LatticeFormatError(f"{path}: count table shape {counts.shape} != {(b_S, b_A)}")
    total = counts.sum()
    if total <= 0:
        raise LatticeFormatError(f"{path}: no visits recorded")
    return VisitationStats(counts.sum(axis=1) / total, counts, n_traj)


def check_stochastic_rows(probs, tol: float = ROW_TOL) -> bool:
    probs = np.asarray(probs, dtype=float)
    return bool(
        np.all(np.isfinite(probs))
        and np.all(probs >= 0)
        and np.all(np.abs(probs.sum(axis=1) - 1.0) <= tol)
    )


def normalize_rows(table) -> tuple:
    """Renormalize nonnegative rows; all-zero rows become uniform.

    Returns the table and the indices of rows that fell back to uniform.
    """
    table = np.asarray(table, dtype=float)
    sums = table.sum(axis=1, keepdims=True)
    empty = (sums[:, 0] <= 0) | ~np.isfinite(sums[:, 0])
    out = np.empty_like(table)
    out[~empty] = table[~empty] / sums[~empty]
    out[empty] = 1.0 / table.shape[1]
    return out, tuple(np.flatnonzero(empty).tolist())


def as_state_bins(bins: Union[StateBins, Sequence[BinEdges]]) -> StateBins:
    if isinstance(bins, (BinEdges, ProductBins)):
        return bins
    bins = tuple(bins)
    return bins[0] if len(bins) == 1 else ProductBins(bins)


__all__ = [
    "BinEdges",
    "ProductBins",
    "LatticePolicy",
    "VisitationStats",
    "Trajectory",
    "LatticeFormatError",
    "save_lattice",
    "load_lattice",
    "save_visitation",
    "load_visitation",
    "normalize_rows",
    "check_stochastic_rows",
    "state_midpoints",
    "as_state_bins",
]
