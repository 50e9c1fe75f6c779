import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from policy_embed.lattice import (
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

from conftest import random_lattice_probs


def test_uniform_2x2_round_trip(tmp_path):
    # rows must sum to one, so a uniform 2x2 lattice holds 0.5 everywhere
    pi = LatticePolicy(np.full((2, 2), 0.5))
    save_lattice(pi, tmp_path / "u.txt")
    body = (tmp_path / "u.txt").read_text().splitlines()[3:]
    assert [float(x) for line in body for x in line.split()] == [0.5] * 4
    with pytest.raises(ValueError):
        LatticePolicy(np.full((2, 2), 0.25))
    assert load_lattice(tmp_path / "u.txt") == pi


def test_35x15_random_round_trip_is_exact(tmp_path, rng):
    probs = random_lattice_probs(rng, 35, 15)
    pi = LatticePolicy(probs, BinEdges(np.sort(rng.normal(size=36))), BinEdges.uniform(-2, 2, 15))
    save_lattice(pi, tmp_path / "l.txt")
    back = load_lattice(tmp_path / "l.txt")
    assert np.array_equal(back.probs, pi.probs)
    assert back == pi
    assert not back.renormalized


def test_product_bins_round_trip(tmp_path):
    bins = ProductBins((BinEdges([0.0, 1.0, 2.0]), BinEdges([-1.0, 0.0, 0.5, 1.0])))
    pi = LatticePolicy.uniform(bins, BinEdges.uniform(-1, 1, 4))
    save_lattice(pi, tmp_path / "p.txt")
    assert load_lattice(tmp_path / "p.txt") == pi


def test_nan_lattice_rejected():
    with pytest.raises(ValueError):
        LatticePolicy([[np.nan, 1.0], [0.5, 0.5]])


def _write(path, rows):
    lines = ["2 2", "0 1 2", "0 1 2"] + [" ".join(repr(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def test_load_rejects_half_row(tmp_path):
    _write(tmp_path / "bad.txt", [[0.25, 0.25], [0.5, 0.5]])
    with pytest.raises(LatticeFormatError):
        load_lattice(tmp_path / "bad.txt")


def test_load_repairs_small_drift(tmp_path):
    _write(tmp_path / "drift.txt", [[0.5, 0.5 + 1e-8], [0.5, 0.5]])
    with pytest.warns(UserWarning):
        pi = load_lattice(tmp_path / "drift.txt")
    assert pi.renormalized
    assert abs(pi.probs[0].sum() - 1) < 1e-15


def test_comments_and_malformed_header(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# lattice\n1 2\n0 1\n0 1 2  # actions\n0.3 0.7\n")
    assert load_lattice(p).probs.tolist() == [[0.3, 0.7]]
    p.write_text("1\n0 1\n0 1 2\n0.3 0.7\n")
    with pytest.raises(LatticeFormatError):
        load_lattice(p)


def test_bin_edges_invariants():
    with pytest.raises(ValueError):
        BinEdges([0.0, 0.0, 1.0])
    e = BinEdges([0.0, 1.0, 3.0])
    assert e.b == 2
    assert all(e.edges[i] < e.midpoint(i) < e.edges[i + 1] for i in range(e.b))
    # right-closed bins, clamped at both ends
    assert e.bin_index([-5.0, 0.0, 1.0, 1.5, 3.0, 9.0]).tolist() == [0, 0, 0, 1, 1, 1]


def test_visitation_invariants(tmp_path):
    counts = np.array([[3, 1], [0, 0], [2, 2]])
    stats = VisitationStats(counts.sum(axis=1) / counts.sum(), counts, 2)
    assert stats.n_steps == 8
    save_visitation(stats, tmp_path / "v.txt")
    assert load_visitation(tmp_path / "v.txt") == stats
    with pytest.raises(ValueError):
        VisitationStats([0.5, 0.25, 0.25], counts, 2)


def test_trajectory_lengths_must_agree():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        Trajectory(np.zeros(2), np.array([0.0, np.inf]), np.zeros(2))


def test_lattice_is_immutable():
    pi = LatticePolicy([[0.5, 0.5]])
    with pytest.raises(ValueError):
        pi.probs[0, 0] = 1.0


positive_tables = hnp.arrays(float, hnp.array_shapes(min_dims=2, max_dims=2, max_side=8),
                             elements=st.floats(0.001, 1000.0))


@given(positive_tables)
def test_normalized_tables_round_trip(tmp_path_factory, table):
    pi = LatticePolicy(table / table.sum(axis=1, keepdims=True))
    path = tmp_path_factory.mktemp("rt") / "x.txt"
    save_lattice(pi, path)
    back = load_lattice(path)
    assert np.array_equal(back.probs, pi.probs)
    assert np.all(np.abs(back.probs.sum(axis=1) - 1) <= 1e-9)
