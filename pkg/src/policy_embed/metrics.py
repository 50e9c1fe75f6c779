"""Distances between policies, return statistics and truncation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ROW_TOL, BinEdges, LatticePolicy, normalize_rows, state_midpoints
from .simulation.policies import state_bin_index


def wasserstein1_discrete(p, q, support) -> float:
    """W1 between two pmfs on a common increasing support.

    ``sum_i |F_p(x_i) - F_q(x_i)| (x_{i+1} - x_i)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x = np.asarray(support, dtype=float)
    if not (p.shape == q.shape == x.shape) or p.ndim != 1:
        raise ValueError("p, q and support must be 1-D arrays of equal length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("support must be strictly increasing")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > ROW_TOL:
            raise ValueError(f"{name} is not a normalized pmf")
    diff = np.cumsum(p - q)[:-1]
    return float(np.sum(np.abs(diff) * np.diff(x)))


def _row_w1(P, Q, x) -> np.ndarray:
    diff = np.cumsum(P - Q, axis=1)[:, :-1]
    return np.abs(diff) @ np.diff(x)


def avg_policy_w1(pi: LatticePolicy, pi_hat: LatticePolicy, state_weights=None) -> float:
    """State-weighted mean of the per-row W1 on action-bin midpoints.

    ``state_weights`` defaults to uniform over state bins.
    """
    if pi.shape != pi_hat.shape:
        raise ValueError(f"lattice shapes differ: {pi.shape} vs {pi_hat.shape}")
    if pi.action_bins != pi_hat.action_bins:
        raise ValueError("lattices use different action bins")
    if state_weights is None:
        w = np.full(pi.b_S, 1.0 / pi.b_S)
    else:
        w = np.asarray(state_weights, dtype=float)
        if w.shape != (pi.b_S,) or np.any(w < 0) or abs(w.sum() - 1) > ROW_TOL:
            raise ValueError("state_weights must be a probability vector over state bins")
    x = pi.action_bins.midpoints
    if x.size == 1:
        return 0.0
    return float(w @ _row_w1(pi.probs, pi_hat.probs, x))


def refine_rows(probs, coarse: BinEdges, fine: BinEdges) -> np.ndarray:
    """Spread each coarse bin's mass uniformly and re-bin it onto ``fine``.

    Both bin sets must span the same interval.
    """
    if not (np.isclose(coarse.edges[0], fine.edges[0]) and np.isclose(coarse.edges[-1], fine.edges[-1])):
        raise ValueError("coarse and fine bins must cover the same interval")
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    cdf = np.concatenate([np.zeros((len(probs), 1)), np.cumsum(probs, axis=1)], axis=1)
    at_fine = np.stack([np.interp(fine.edges, coarse.edges, row) for row in cdf])
    return np.diff(at_fine, axis=1)


@dataclass(frozen=True)
class ReturnStats:
    mean: float
    std: float
    variance: float
    n: int

    @property
    def stderr(self) -> float:
        return self.std / np.sqrt(self.n)


def return_stats(returns) -> ReturnStats:
    """Sample mean and unbiased variance of episode returns."""
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 2:
        raise ValueError("need at least two returns for a sample variance")
    var = float(r.var(ddof=1))
    return ReturnStats(float(r.mean()), float(np.sqrt(var)), var, int(r.size))


def log_logistic_derivative(x) -> np.ndarray:
    """``log sigma'(x)`` for the logistic ``sigma``, stable for large ``|x|``."""
    a = np.abs(np.asarray(x, dtype=float))
    return -a - 2.0 * np.log1p(np.exp(-a))


@dataclass(frozen=True)
class VarianceConditions:
    """Outcome of the three sufficient conditions for a variance reduction.

    ``condition3`` concerns a Taylor remainder that cannot be evaluated and
    is always reported as ``"assumed"``.
    """

    condition1: bool
    condition2: bool
    condition3: str = "assumed"
    sigma: str = "logistic"

    @property
    def verified(self) -> bool:
        return self.condition1 and self.condition2


def check_variance_conditions(eps_K_samples, eta_pi: float, eta_hat: float, sigma_kind: str = "logistic"):
    """Check ``sigma'(eta_hat) <= sigma'(eta_pi)`` and ``sqrt(E[eps^2] / 3) >= E[eps]``.

    ``eps_K_samples`` are residuals ``pi - pi_hat_K`` at sampled
    state-action pairs.  The derivative comparison is made in log space.
    """
    if sigma_kind != "logistic":
        raise ValueError(f"unsupported normalizer {sigma_kind!r}; only 'logistic' is implemented")
    eps = np.asarray(eps_K_samples, dtype=float).ravel()
    if eps.size == 0:
        raise ValueError("no residual samples")
    c1 = bool(log_logistic_derivative(eta_hat) <= log_logistic_derivative(eta_pi))
    c2 = bool(np.sqrt(np.mean(eps**2) / 3.0) >= np.mean(eps))
    return VarianceConditions(c1, c2)


def truncation_residuals(pi: LatticePolicy, pi_hat: LatticePolicy, states, actions) -> np.ndarray:
    """``pi(a|s) - pi_hat(a|s)`` on the lattice cells of raw ``(s, a)`` pairs."""
    rows = state_bin_index(pi.state_bins, states)
    cols = pi.action_bins.bin_index(np.asarray(actions, dtype=float).ravel())
    return pi.probs[rows, cols] - pi_hat.probs[rows, cols]


def mle_baseline(oracle, state_bins, action_bins: BinEdges, K: int, rng: np.random.Generator) -> LatticePolicy:
    """Histogram of ``K`` oracle draws at every state-bin midpoint."""
    if K < 1:
        raise ValueError("K must be at least 1")
    mids = state_midpoints(state_bins)
    counts = np.zeros((state_bins.b, action_bins.b))
    batch = getattr(oracle, "sample_batch", None)
    for i, s in enumerate(mids):
        if batch is not None:
            draws = np.asarray(batch(np.repeat(s[None, :], K, axis=0), [rng] * K))
        else:
            arg = s[0] if s.shape == (1,) else s
            draws = np.array([oracle.sample(arg, rng) for _ in range(K)])
        np.add.at(counts[i], action_bins.bin_index(draws), 1.0)
    probs, empty = normalize_rows(counts)
    return LatticePolicy(probs, state_bins, action_bins, uniform_rows=empty)


def l1_error(p, q) -> float:
    return float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


def loglog_slope(ks, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(k)``."""
    ks = np.asarray(ks, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(ks <= 0) or np.any(errors <= 0):
        raise ValueError("log-log slope needs positive values")
    return float(np.polyfit(np.log(ks), np.log(errors), 1)[0])
