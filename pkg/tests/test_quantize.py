import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from policy_embed.lattice import BinEdges, ProductBins
from policy_embed.quantize import (
    EmpiricalCdf,
    QuantileBinner,
    discretization_error_volume,
    discretize_policy,
    fit_quantile_bins,
)
from policy_embed.simulation import UniformPolicy


def inf_quantile(sorted_values, p):
    """Reference rule: smallest sample x with p <= (#samples <= x) / n."""
    n = len(sorted_values)
    for x in sorted_values:
        if p <= sum(v <= x for v in sorted_values) / n:
            return x
    return sorted_values[-1]


def test_eight_samples_four_bins():
    assert fit_quantile_bins(np.arange(1, 9), 4).edges.tolist() == [1, 2, 4, 6, 8]


def test_single_bin_spans_range(rng):
    x = rng.normal(size=50)
    assert fit_quantile_bins(x, 1).edges.tolist() == [x.min(), x.max()]


def test_duplicates_collapse_error():
    with pytest.raises(ValueError, match="duplicate"):
        fit_quantile_bins([1, 1, 1, 2], 3)
    with pytest.raises(ValueError):
        fit_quantile_bins([1, 2, 3], 0)


def test_four_gaussians_bins_denser_near_modes(rng):
    mus = np.array([-1.5, -0.5, 0.5, 1.5])
    x = (mus[:, None] + 0.3 * rng.normal(size=(4, 1000))).ravel()
    bins = fit_quantile_bins(x, 10)
    w = bins.widths
    assert min(w[0], w[-1]) > max(w[1:-1])
    at_modes = w[bins.bin_index(mus)]
    assert np.all(at_modes < 0.5 * w[0])


def test_empirical_cdf_quantile_rule(rng):
    x = np.sort(rng.integers(0, 20, size=37).astype(float))
    cdf = EmpiricalCdf(x)
    for p in np.linspace(0, 1, 41):
        assert cdf.quantile(p) == inf_quantile(list(x), p)
    assert cdf(x.max()) == 1.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=13, max_size=200, unique=True), st.integers(1, 12))
def test_quantile_edges_contain_samples_and_balance(samples, b):
    x = np.array(samples)
    bins = fit_quantile_bins(x, b)
    assert np.all(np.diff(bins.edges) > 0)
    assert bins.edges[0] == x.min() and bins.edges[-1] == x.max()
    counts = np.bincount(bins.bin_index(x), minlength=b)
    n = x.size
    assert counts.min() >= n // b - 1 and counts.max() <= -(-n // b) + 1


def test_uniform_samples_give_near_equal_widths():
    x = np.random.default_rng(3).uniform(0, 1, 100_000)
    w = fit_quantile_bins(x, 10).widths
    assert np.max(np.abs(w / w.mean() - 1)) < 0.05


class _Normal:
    def density(self, state, action):
        return stats.norm.pdf(action)

    def sample(self, state, rng):
        return rng.normal()


def test_gaussian_oracle_row():
    pi = discretize_policy(_Normal(), BinEdges([0.0, 1.0]), BinEdges([-3.0, -1.0, 1.0, 3.0]))
    ref = np.array([np.exp(-2.0), 1.0, np.exp(-2.0)])
    assert np.allclose(pi.probs[0], ref / ref.sum(), atol=1e-15)
    assert np.allclose(pi.probs[0], [0.1065, 0.7870, 0.1065], atol=1e-4)


def test_uniform_oracle_gives_uniform_rows():
    pi = discretize_policy(UniformPolicy(-1, 1), BinEdges.uniform(0, 1, 4), BinEdges.uniform(-1, 1, 5))
    assert np.allclose(pi.probs, 0.2)


class _Bad:
    def density(self, state, action):
        return np.nan if action > 0 else 1.0


class _Zero:
    def density(self, state, action):
        return 0.0 if state > 0.5 else 1.0


def test_non_finite_density_names_cell():
    with pytest.raises(ValueError, match="action bin 1"):
        discretize_policy(_Bad(), BinEdges([0.0, 1.0]), BinEdges([-1.0, 0.0, 1.0]))


def test_zero_rows_fall_back_to_uniform():
    pi = discretize_policy(_Zero(), BinEdges([0.0, 0.5, 1.0]), BinEdges([-1.0, 0.0, 1.0]))
    assert pi.uniform_rows == (1,)
    assert pi.probs[1].tolist() == [0.5, 0.5]


def test_volume_zero_for_exact_step_cdf():
    cdf = EmpiricalCdf([0.0, 2.0, 4.0, 6.0])
    bins = BinEdges([0.0, 2.0, 4.0, 6.0, 8.0])
    inner = [EmpiricalCdf([0.0, 1.0]) for _ in range(4)]
    abins = [BinEdges([0.0, 0.5, 1.0])] * 4
    assert discretization_error_volume(cdf, inner, bins, abins) == 0.0


@pytest.mark.parametrize("b_S,b_A", [(2, 3), (4, 4), (5, 2)])
def test_volume_uniform_matches_closed_form(b_S, b_A):
    # linear CDF: every bin leaves a triangle of area 1 / (2 b^2)
    F = lambda x: np.clip(x, 0, 1)
    sbins = BinEdges.uniform(0, 1, b_S)
    v = discretization_error_volume(F, [F] * b_S, sbins, [BinEdges.uniform(0, 1, b_A)] * b_S)
    assert v == pytest.approx(1 / (4 * b_S * b_A), rel=1e-12)


def _mixture_cdf(x):
    return 0.5 * stats.norm.cdf(x, -1.5, 0.5) + 0.5 * stats.norm.cdf(x, 1.5, 0.5)


def _volume(cdf, b, samples):
    bins = fit_quantile_bins(samples, b)
    return discretization_error_volume(cdf, [cdf] * b, bins, [bins] * b)


def test_volume_decreases_when_bins_double(rng):
    x = np.concatenate([rng.normal(-1.5, 0.5, 5000), rng.normal(1.5, 0.5, 5000)])
    assert _volume(_mixture_cdf, 10, x) < _volume(_mixture_cdf, 5, x)


@pytest.mark.parametrize("cdf,quantile,lo,hi", [
    (lambda x: np.clip(x, 0, 1) ** 2, np.sqrt, 0.0, 1.0),
    (stats.norm.cdf, stats.norm.ppf, -4.0, 4.0),
    (lambda x: 1 - np.exp(-np.clip(x, 0, None)), lambda p: -np.log1p(-p), 0.0, 8.0),
])
def test_volume_nonincreasing_in_b(cdf, quantile, lo, hi):
    vols = []
    for b in (2, 4, 8, 16):
        bins = BinEdges(np.concatenate([[lo], quantile(np.arange(1, b) / b), [hi]]))
        vols.append(discretization_error_volume(cdf, [cdf] * b, bins, [bins] * b))
    assert all(v2 <= v1 for v1, v2 in zip(vols, vols[1:]))


def test_volume_rejects_mismatched_bins():
    F = lambda x: x
    with pytest.raises(ValueError):
        discretization_error_volume(F, [F], BinEdges.uniform(0, 1, 2), [BinEdges.uniform(0, 1, 2)])


def test_quantile_binner_matches_function(rng):
    X = rng.normal(size=(500, 2))
    qb = QuantileBinner(n_bins=(4, 3)).fit(X)
    assert isinstance(qb.bins_, ProductBins)
    assert qb.bin_edges_[0] == fit_quantile_bins(X[:, 0], 4)
    Xt = qb.transform(X)
    assert Xt.shape == (500, 2) and Xt[:, 1].max() == 2
    assert qb.cell_index(X).max() < 12


def test_bins_need_one_more_distinct_value_than_bins():
    x = np.arange(6.0)
    assert fit_quantile_bins(x, 5).b == 5
    with pytest.raises(ValueError, match="at least 7"):
        fit_quantile_bins(x, 6)
