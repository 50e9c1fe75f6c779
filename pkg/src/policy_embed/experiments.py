"""Desk-scale experiments shared by the command line and the acceptance suite.

Each runner returns plain rows (lists of dicts with a fixed key order) plus
a summary, so callers can write CSV or assert on the numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import BinEdges, LatticePolicy, ProductBins, VisitationStats
from .markov import (
    GAP_TOL,
    PolicyMatrix,
    coverage_bound,
    coverage_gap,
    make_chain_mdp,
    policy_evaluation,
    random_mdp,
    random_policy,
    sample_trajectories,
)
from .metrics import (
    avg_policy_w1,
    check_variance_conditions,
    l1_error,
    loglog_slope,
    mle_baseline,
    refine_rows,
    return_stats,
    truncation_residuals,
)
from .prune import prune_lattice, prune_policy, pruning_bound
from .quantize import discretize_policy, fit_quantile_bins
from .spectral import fit_fixed_basis_gmm, fit_gmm, inverse_transform, n_components, project, reconstruct
from .spectral.embedding import padded_shape
from .simulation import (
    DiscreteBandit,
    LatticeAgent,
    boltzmann,
    make_mountain_car,
    make_mountain_car_policy,
    make_pendulum,
    make_pendulum_policy,
    make_turntable,
    rollout,
    state_bin_index,
)


# -- Algorithm pipeline ---------------------------------------------------------

@dataclass
class Discretized:
    lattice: LatticePolicy
    stats: VisitationStats
    pruned: LatticePolicy
    pruned_fraction: float
    returns: np.ndarray = field(repr=False)


def state_bins_for(env, states, b_S: int, binning: str = "quantile"):
    """Per-coordinate bins with ``b_S`` bins on every state dimension."""
    states = np.atleast_2d(states)
    dims = []
    for k in range(env.state_dim):
        if binning == "quantile":
            dims.append(fit_quantile_bins(states[:, k], b_S))
        elif binning == "uniform":
            dims.append(BinEdges.uniform(env.state_low[k], env.state_high[k], b_S))
        else:
            raise ValueError(f"unknown binning {binning!r}")
    return dims[0] if len(dims) == 1 else ProductBins(tuple(dims))


def discretize_pipeline(env, policy, b_S: int, b_A: int, n_traj: int, seed: int,
                        binning: str = "quantile", max_steps=None) -> Discretized:
    """Roll out, bin states, tabulate the policy and prune unvisited bins."""
    res = rollout(env, policy, n_traj, max_steps, seed=seed)
    states = np.concatenate([tr.states for tr in res.trajectories])
    actions = np.concatenate([tr.actions for tr in res.trajectories])
    state_bins = state_bins_for(env, states, b_S, binning)
    action_bins = BinEdges.uniform(env.action_low, env.action_high, b_A)
    lattice = discretize_policy(policy, state_bins, action_bins)
    stats = VisitationStats.from_indices(
        state_bin_index(state_bins, states), action_bins.bin_index(actions), state_bins.b, b_A, n_traj
    )
    pruned = prune_lattice(lattice, stats)
    return Discretized(lattice, stats, pruned.base, pruned.pruned_fraction, res.returns)


def full_budget(basis: str, shape) -> int:
    basis = basis.upper()
    if basis == "DFT":
        return n_components(shape)
    if basis == "SVD":
        return min(shape)
    return int(np.prod(padded_shape(shape)))


# -- turntable ------------------------------------------------------------------

TURNTABLE_KS = (1, 2, 3, 5, 10, 15, 20, 30, 50, 100)


def turntable_w1(Ks=TURNTABLE_KS, n_modes: int = 3, b_A: int = 100, n_fine: int = 1000, seed: int = 0,
                 gmm_seeds=(0, 1, 2, 3, 4), em_ks=(1, 2, 3, 5, 10, 20), n_samples: int = 2000):
    """W1 from the Boltzmann turntable policy to order-K reconstructions.

    Reconstructions live on ``b_A`` uniform angle bins and are compared with
    an ``n_fine``-bin tabulation of the density, each coarse bin's mass
    spread uniformly over its interval.
    """
    _, oracle = make_turntable(n_modes, 0.0, 1.0, seed)
    one = BinEdges.index(1)
    coarse = BinEdges.uniform(-np.pi, np.pi, b_A)
    fine = BinEdges.uniform(-np.pi, np.pi, n_fine)
    truth = discretize_policy(oracle, one, fine)
    lattice = discretize_policy(oracle, one, coarse)

    def w1(policy):
        return avg_policy_w1(truth, truth.with_probs(refine_rows(policy.probs, coarse, fine)))

    rows = []
    for K in Ks:
        rows.append({"basis": "DFT", "K": K, "seed": seed, "w1": w1(reconstruct(project(lattice, "DFT", K)))})
    for K in Ks:
        for s in gmm_seeds:
            emb = fit_fixed_basis_gmm(oracle.grid, oracle.pdf(oracle.grid), K, np.random.default_rng([seed, s]), coarse)
            rows.append({"basis": "FGMM", "K": K, "seed": s, "w1": w1(reconstruct(emb))})
    if em_ks:
        rng = np.random.default_rng([seed, 99])
        samples = oracle.sample_batch(np.zeros((n_samples, 1)), [rng] * n_samples)
        for K in em_ks:
            emb = fit_gmm(samples, K, restarts=3, rng=np.random.default_rng([seed, K]), action_bins=coarse)
            rows.append({"basis": "GMM", "K": K, "seed": seed, "w1": w1(reconstruct(emb))})
    return rows


# -- discrete-arm bandit --------------------------------------------------------

def bandit_denoising(n_arms: int = 100, snr: float = 2.5, Ks=tuple(range(1, 11)), seeds=tuple(range(20)),
                     temperature: float = 1.0):
    """Greedy arm of the noisy Boltzmann policy versus its DFT truncations.

    Rewards of both greedy arms are the noise-free expected rewards.
    """
    bandit = DiscreteBandit.from_snr(n_arms, snr)
    rows = []
    for seed in seeds:
        pi = boltzmann(bandit.measure(np.random.default_rng(seed)), temperature)
        lattice = LatticePolicy(pi[None, :])
        arm = int(np.argmax(pi))
        base = float(bandit.expected_reward(arm))
        for K in Ks:
            trunc = inverse_transform(project(lattice, "DFT", K))[0]
            t_arm = int(np.argmax(trunc))
            rows.append({
                "seed": seed, "K": K, "noisy_arm": arm, "truncated_arm": t_arm,
                "reward_noisy": base, "reward_truncated": float(bandit.expected_reward(t_arm)),
            })
    return rows, bandit.snr


# -- Fourier rate ---------------------------------------------------------------

def smooth_periodic_lattice(b_S: int = 32, b_A: int = 128, kappa: float = 2.0) -> LatticePolicy:
    """``pi(a|s) ∝ exp(kappa cos(a - 2 pi s / b_S))`` on a periodic grid."""
    a = 2 * np.pi * np.arange(b_A) / b_A
    s = 2 * np.pi * np.arange(b_S) / b_S
    table = np.exp(kappa * np.cos(a[None, :] - s[:, None]))
    return LatticePolicy(table / table.sum(axis=1, keepdims=True))


def fourier_rate(Ks=(4, 8, 16, 32, 64), lattice: LatticePolicy | None = None):
    lattice = smooth_periodic_lattice() if lattice is None else lattice
    errors = [l1_error(lattice.probs, reconstruct(project(lattice, "DFT", K)).probs) for K in Ks]
    rows = [{"K": K, "l1_error": e} for K, e in zip(Ks, errors)]
    return rows, loglog_slope(Ks, errors)


# -- tabular certification ------------------------------------------------------

def chain_bound_surface(Ns=(5, 10, 20, 50), Ks=None, alpha: float = 0.7, gamma: float = 0.9):
    """Coverage bound and measured gap for DFT truncations of the chain policy."""
    rows = []
    for N in Ns:
        mdp, pi = make_chain_mdp(N, alpha, gamma)
        lattice = LatticePolicy(pi.table)
        ks = range(1, n_components(lattice.shape) + 1) if Ks is None else Ks
        for K in ks:
            alt = PolicyMatrix.from_lattice(reconstruct(project(lattice, "DFT", K)))
            rows.append({"N": N, "K": K, "bound": coverage_bound(mdp, pi, alt), "gap": coverage_gap(mdp, pi, alt)})
    return rows


def coverage_certification(n_mdps: int = 200, seed: int = 0, max_states: int = 8, max_actions: int = 4):
    """Coverage bound against the measured occupancy gap on random MDPs.

    The alternative policy is a DFT truncation of a random policy.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_mdps):
        S = int(rng.integers(2, max_states + 1))
        A = int(rng.integers(2, max_actions + 1))
        mdp = random_mdp(S, A, rng)
        pi = random_policy(S, A, rng)
        lattice = LatticePolicy(pi.table)
        K = int(rng.integers(1, n_components(lattice.shape) + 1))
        alt = PolicyMatrix.from_lattice(reconstruct(project(lattice, "DFT", K)))
        bound = coverage_bound(mdp, pi, alt)
        gap = coverage_gap(mdp, pi, alt)
        rows.append({"mdp": i, "S": S, "A": A, "K": K, "bound": bound, "gap": gap, "bound_holds": gap <= bound + GAP_TOL})
    return rows


def pruning_certification(n_mdps: int = 200, delta: float = 0.1, seed: int = 0, n_traj: int = 20,
                          horizon: int = 50, max_states: int = 8, max_actions: int = 4):
    """Return gap of the empirical-frequency pruned policy against its bound."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_mdps):
        S = int(rng.integers(2, max_states + 1))
        A = int(rng.integers(2, max_actions + 1))
        mdp = random_mdp(S, A, rng)
        pi = random_policy(S, A, rng)
        counts = sample_trajectories(mdp, pi, n_traj, horizon, rng)
        stats = VisitationStats(counts.sum(axis=1) / counts.sum(), counts, n_traj)
        pruned = prune_policy(stats, A)
        eta = policy_evaluation(mdp, pi).eta
        eta_pruned = policy_evaluation(mdp, PolicyMatrix.from_lattice(pruned.base)).eta
        N = int(counts.sum())
        bound = pruning_bound(N, mdp.r_max, mdp.gamma, S, A, delta)
        gap = abs(eta - eta_pruned)
        rows.append({"mdp": i, "S": S, "A": A, "N": N, "bound": bound, "gap": gap, "bound_holds": gap <= bound})
    return rows


# -- control tasks --------------------------------------------------------------

def pendulum_variance(b_S: int = 35, b_A: int = 15, sigma: float = 0.3, n_traj: int = 100, seed: int = 0,
                      binning: str = "quantile", jitter: bool = True, basis: str = "DFT"):
    """Return spread of the continuous policy versus its half-budget truncation."""
    env = make_pendulum()
    policy = make_pendulum_policy(sigma)
    disc = discretize_pipeline(env, policy, b_S, b_A, n_traj, seed, binning)
    K = disc.pruned.b_S * disc.pruned.b_A // 2
    hat = reconstruct(project(disc.pruned, basis, K))
    eval_seed = seed + 1
    r_pi = rollout(env, policy, n_traj, seed=eval_seed).returns
    res_hat = rollout(env, LatticeAgent(hat, jitter), n_traj, seed=eval_seed)
    s0 = np.stack([tr.states[0] for tr in res_hat.trajectories])
    a0 = np.array([tr.actions[0] for tr in res_hat.trajectories])
    cond = check_variance_conditions(truncation_residuals(disc.pruned, hat, s0, a0), r_pi.mean(), res_hat.returns.mean())
    return {
        "K": K, "binning": binning, "stats_pi": return_stats(r_pi), "stats_hat": return_stats(res_hat.returns),
        "conditions": cond,
    }


def cmc_mle(b_S: int = 35, b_A: int = 10, sigma: float = 0.3, seeds=tuple(range(10)), n_traj: int = 100,
            mle_samples: int = 100, bases=("DFT", "SVD", "DB4"), binning: str = "quantile"):
    """Mean return per seed of each embedding at full budget and of the MLE lattice."""
    env = make_mountain_car()
    policy = make_mountain_car_policy(sigma)
    rows = []
    for seed in seeds:
        disc = discretize_pipeline(env, policy, b_S, b_A, n_traj, seed, binning)
        agents = {b: reconstruct(project(disc.pruned, b, full_budget(b, disc.pruned.shape))) for b in bases}
        mle = mle_baseline(policy, disc.lattice.state_bins, disc.lattice.action_bins, mle_samples,
                           np.random.default_rng([seed, 1]))
        agents["MLE"] = prune_lattice(mle, disc.stats).base
        for name, lat in agents.items():
            ret = rollout(env, LatticeAgent(lat, jitter=True), n_traj, seed=seed + 1000).returns
            rows.append({"method": name, "seed": seed, "mean_return": float(ret.mean())})
    return rows
