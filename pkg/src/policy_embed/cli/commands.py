"""Subcommand implementations.  Each returns the list of files it wrote."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .. import __version__, experiments as ex
from ..lattice import LatticePolicy, VisitationStats, load_lattice, load_visitation, save_lattice, save_visitation
from ..markov import (
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
from ..metrics import avg_policy_w1, return_stats
from ..prune import prune_lattice, prune_policy, pruning_bound
from ..quantize import EmpiricalCdf, conditional_action_bins, discretization_error_volume, fit_quantile_bins
from ..simulation import (
    LatticeAgent,
    act_embedded,
    make_mountain_car,
    make_mountain_car_policy,
    make_pendulum,
    make_pendulum_policy,
    make_turntable,
    rollout,
)
from ..spectral.dft import conjugate_partner
from ..spectral import (
    fit_gmm,
    geometric_rate,
    inverse_transform,
    n_components,
    project,
    reconstruct,
    save_embedding,
    truncation_return_bound,
)
from .config import ConfigError, ExperimentConfig

SIMULATED = ("pendulum", "cmc", "turntable")
TABULAR = ("chain", "random")


# -- output -----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(path: Path, header, rows, cfg: ExperimentConfig) -> Path:
    """CSV with a fixed header and a trailing metadata comment block."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
        fh.write(f"# config-hash: {cfg.digest()}\n")
        fh.write(f"# seed: {','.join(str(s) for s in cfg.seeds)}\n")
        fh.write(f"# version: {__version__}\n")
    return path


def _out(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- shared pieces ------------------------------------------------------------------

def _env_and_policy(cfg: ExperimentConfig):
    if cfg.env == "pendulum":
        return make_pendulum(), make_pendulum_policy(cfg.sigma)
    if cfg.env == "cmc":
        return make_mountain_car(), make_mountain_car_policy(cfg.sigma)
    if cfg.env == "turntable":
        return make_turntable(seed=cfg.seeds[0])
    raise ConfigError(f"env {cfg.env!r} is tabular; this command needs one of {SIMULATED}")


def _discretize(cfg: ExperimentConfig, seed: int) -> ex.Discretized:
    env, policy = _env_and_policy(cfg)
    binning = "uniform" if cfg.env == "turntable" else cfg.binning
    return ex.discretize_pipeline(env, policy, cfg.state_bins, cfg.action_bins, cfg.n_trajectories, seed, binning,
                                  cfg.max_steps)


def _input_lattice(cfg: ExperimentConfig, name: str = "lattice.txt") -> LatticePolicy:
    path = cfg.lattice or Path(cfg.out) / name
    if not Path(path).is_file():
        raise ConfigError(f"no lattice given and {path} does not exist (run discretize first)")
    return load_lattice(path)


def _input_visitation(cfg: ExperimentConfig):
    path = cfg.visitation or Path(cfg.out) / "visitation.txt"
    return load_visitation(path) if Path(path).is_file() else None


def _embed(lattice: LatticePolicy, basis: str, K: int, seed: int):
    if basis.upper() != "GMM":
        return project(lattice, basis, K)
    if lattice.b_S != 1:
        raise ConfigError("the gmm basis fits single-state (bandit) lattices only")
    rng = np.random.default_rng([seed, 7])
    samples = np.array([act_embedded(lattice, [0.0], rng, jitter=True) for _ in range(2000)])
    return fit_gmm(samples, K, restarts=3, rng=rng, action_bins=lattice.action_bins)


# -- subcommands ---------------------------------------------------------------------

DISCRETIZE_COLUMNS = ["env", "seed", "n_state_bins", "b_A", "n_steps", "pruned_fraction", "mean_return"]


def cmd_discretize(cfg: ExperimentConfig):
    seed = cfg.seeds[0]
    disc = _discretize(cfg, seed)
    out = _out(cfg)
    save_lattice(disc.lattice, out / "lattice.txt")
    save_visitation(disc.stats, out / "visitation.txt")
    row = {
        "env": cfg.env, "seed": seed, "n_state_bins": disc.lattice.b_S, "b_A": disc.lattice.b_A,
        "n_steps": disc.stats.n_steps, "pruned_fraction": disc.pruned_fraction,
        "mean_return": float(disc.returns.mean()),
    }
    csv_path = write_csv(out / "discretize.csv", DISCRETIZE_COLUMNS, [row], cfg)
    return [out / "lattice.txt", out / "visitation.txt", csv_path]


PRUNE_COLUMNS = ["n_state_bins", "n_visited", "pruned_fraction", "kept_parameters", "total_parameters"]


def cmd_prune(cfg: ExperimentConfig):
    lattice = _input_lattice(cfg)
    stats = _input_visitation(cfg)
    if stats is None:
        raise ConfigError("prune needs visitation statistics (visitation = PATH or run discretize)")
    pruned = prune_lattice(lattice, stats, cfg.threshold)
    out = _out(cfg)
    save_lattice(pruned.base, out / "pruned.txt")
    row = {
        "n_state_bins": lattice.b_S, "n_visited": int(pruned.visited_mask.sum()),
        "pruned_fraction": pruned.pruned_fraction, "kept_parameters": pruned.n_kept_parameters,
        "total_parameters": lattice.b_S * lattice.b_A,
    }
    return [out / "pruned.txt", write_csv(out / "prune.csv", PRUNE_COLUMNS, [row], cfg)]


EMBED_COLUMNS = ["basis", "K", "effective_K", "parameter_count", "frobenius_error", "w1"]


def cmd_embed(cfg: ExperimentConfig):
    lattice = _input_lattice(cfg)
    stats = _input_visitation(cfg)
    if stats is not None:
        lattice = prune_lattice(lattice, stats, cfg.threshold).base
    out = _out(cfg)
    written, rows = [], []
    for K in sorted(set(cfg.k)):
        emb = _embed(lattice, cfg.basis, K, cfg.seeds[0])
        hat = reconstruct(emb)
        stem = f"{cfg.basis}_K{K}"
        save_embedding(emb, out / f"embedding_{stem}.txt")
        save_lattice(hat, out / f"reconstruction_{stem}.txt")
        written += [out / f"embedding_{stem}.txt", out / f"reconstruction_{stem}.txt"]
        rows.append({
            "basis": cfg.basis, "K": K, "effective_K": emb.K, "parameter_count": emb.parameter_count,
            "frobenius_error": float(np.linalg.norm(inverse_transform(emb) - lattice.probs)),
            "w1": avg_policy_w1(lattice, hat),
        })
    written.append(write_csv(out / "embed.csv", EMBED_COLUMNS, rows, cfg))
    return written


EVALUATE_COLUMNS = ["method", "K", "seed", "parameter_count", "mean_return", "std_return", "var_return", "w1"]


def cmd_evaluate(cfg: ExperimentConfig):
    env, policy = _env_and_policy(cfg)
    rows = []
    for seed in cfg.seeds:
        if cfg.lattice:
            lattice = _input_lattice(cfg)
            stats = _input_visitation(cfg)
            base = prune_lattice(lattice, stats, cfg.threshold).base if stats is not None else lattice
            rho = stats.rho if stats is not None else None
        else:
            disc = _discretize(cfg, seed)
            base, rho = disc.pruned, disc.stats.rho
        eval_seed = seed + 1000
        ret = rollout(env, policy, cfg.n_trajectories, cfg.max_steps, eval_seed).returns
        st = return_stats(ret)
        rows.append({"method": "policy", "K": 0, "seed": seed, "parameter_count": 0,
                     "mean_return": st.mean, "std_return": st.std, "var_return": st.variance, "w1": float("nan")})
        ret = rollout(env, LatticeAgent(base, cfg.jitter), cfg.n_trajectories, cfg.max_steps, eval_seed).returns
        st = return_stats(ret)
        rows.append({"method": "lattice", "K": base.b_S * base.b_A, "seed": seed,
                     "parameter_count": base.b_S * base.b_A, "mean_return": st.mean, "std_return": st.std, "var_return": st.variance,
                     "w1": 0.0})
        for K in sorted(set(cfg.k)):
            emb = _embed(base, cfg.basis, K, seed)
            hat = reconstruct(emb)
            ret = rollout(env, LatticeAgent(hat, cfg.jitter), cfg.n_trajectories, cfg.max_steps, eval_seed).returns
            st = return_stats(ret)
            rows.append({"method": cfg.basis, "K": K, "seed": seed, "parameter_count": emb.parameter_count,
                         "mean_return": st.mean, "std_return": st.std, "var_return": st.variance, "w1": avg_policy_w1(base, hat, rho)})
    order = {"policy": 0, "lattice": 1}
    rows.sort(key=lambda r: (order.get(r["method"], 2), r["method"], r["K"], r["seed"]))
    return [write_csv(_out(cfg) / "evaluate.csv", EVALUATE_COLUMNS, rows, cfg)]


BOUND_COLUMNS = [
    "case", "S", "A", "K", "coverage_bound", "coverage_gap", "truncation_bound", "truncation_gap",
    "pruning_bound", "pruning_gap", "bound_holds",
]
VOLUME_COLUMNS = ["term", "dim", "value"]


def _truncation_terms(mdp, pi: PolicyMatrix, lattice: LatticePolicy, K: int):
    """Truncation bound on the lattice itself as an RKHS with unit eigenvalues.

    Coefficients are unitary DFT coefficients, so ``M = 1`` and the
    distance is the Frobenius norm of the residual.  The tail rate is
    estimated from the residual spectrum ranked like the policy's spectrum.
    """
    emb = project(lattice, "DFT", K)
    hat = reconstruct(emb)
    alt = PolicyMatrix.from_lattice(hat)
    v_pi, v_alt = policy_evaluation(mdp, pi), policy_evaluation(mdp, alt)
    gap = abs(v_pi.eta - v_alt.eta)
    # kept coefficients first, the rest by decreasing policy magnitude
    kept = np.zeros(lattice.probs.size, dtype=bool)
    kept[emb["index"]] = True
    kept[conjugate_partner(lattice.shape)[emb["index"]]] = True
    mags = np.abs(np.fft.fft2(lattice.probs, norm="ortho").ravel())
    order = np.lexsort((np.arange(mags.size), -mags, ~kept))
    resid = np.fft.fft2(lattice.probs - hat.probs, norm="ortho").ravel()
    gaps = np.abs(resid[order])
    eps = geometric_rate(gaps, np.ones(gaps.size), int(kept.sum()))
    delta = float(np.linalg.norm(lattice.probs - hat.probs))
    eps_max = max(v_pi.eps_bar, v_alt.eps_bar)
    if not 0 < eps < 1:
        return alt, float("nan"), gap
    bound = truncation_return_bound(delta, 1.0, v_pi.eps_bar, eps_max, mdp.gamma, mdp.n_actions, eps, int(kept.sum()))
    return alt, bound, gap


def _pruning_terms(mdp, pi, cfg, rng):
    horizon = cfg.max_steps or 100
    counts = sample_trajectories(mdp, pi, cfg.n_trajectories, horizon, rng)
    stats = VisitationStats(counts.sum(axis=1) / counts.sum(), counts, cfg.n_trajectories)
    pruned = PolicyMatrix.from_lattice(prune_policy(stats, mdp.n_actions, cfg.threshold).base)
    gap = abs(policy_evaluation(mdp, pi).eta - policy_evaluation(mdp, pruned).eta)
    return pruning_bound(int(counts.sum()), mdp.r_max, mdp.gamma, mdp.n_states, mdp.n_actions, cfg.delta), gap


def _bound_rows(case, mdp, pi, Ks, cfg, rng):
    lattice = LatticePolicy(pi.table)
    p_bound, p_gap = _pruning_terms(mdp, pi, cfg, rng)
    rows = []
    for K in Ks:
        K = min(K, lattice.b_S * lattice.b_A)
        alt, t_bound, t_gap = _truncation_terms(mdp, pi, lattice, K)
        c_bound, c_gap = coverage_bound(mdp, pi, alt), coverage_gap(mdp, pi, alt)
        holds = c_gap <= c_bound + GAP_TOL and p_gap <= p_bound and (np.isnan(t_bound) or t_gap <= t_bound)
        rows.append({
            "case": case, "S": mdp.n_states, "A": mdp.n_actions, "K": K,
            "coverage_bound": c_bound, "coverage_gap": c_gap, "truncation_bound": t_bound, "truncation_gap": t_gap,
            "pruning_bound": p_bound, "pruning_gap": p_gap, "bound_holds": bool(holds),
        })
    return rows


def cmd_bound(cfg: ExperimentConfig):
    out = _out(cfg)
    if cfg.env in SIMULATED:
        return [write_csv(out / "bound.csv", VOLUME_COLUMNS, _volume_rows(cfg), cfg)]
    rng = np.random.default_rng(cfg.seeds[0])
    rows = []
    if cfg.env == "chain":
        for N in cfg.chain_states:
            mdp, pi = make_chain_mdp(N, cfg.alpha, cfg.gamma)
            Ks = sorted(set(cfg.k)) if cfg.k != (10,) else range(1, n_components((N, 2)) + 1)
            rows += _bound_rows(f"chain-{N}", mdp, pi, Ks, cfg, rng)
    else:
        for i in range(cfg.n_mdps):
            S, A = int(rng.integers(2, 9)), int(rng.integers(2, 5))
            mdp = random_mdp(S, A, rng, cfg.gamma)
            pi = random_policy(S, A, rng)
            rows += _bound_rows(f"random-{i}", mdp, pi, sorted(set(cfg.k)), cfg, rng)
    return [write_csv(out / "bound.csv", BOUND_COLUMNS, rows, cfg)]


def _volume_rows(cfg: ExperimentConfig):
    """Discretization volume per state coordinate plus the pruning bound."""
    seed = cfg.seeds[0]
    env, policy = _env_and_policy(cfg)
    res = rollout(env, policy, cfg.n_trajectories, cfg.max_steps, seed)
    states = np.concatenate([tr.states for tr in res.trajectories])
    actions = np.concatenate([tr.actions for tr in res.trajectories])
    disc = _discretize(cfg, seed)
    rows = []
    for d in range(states.shape[1]):
        if np.unique(states[:, d]).size < 2:
            continue
        try:
            sbins = fit_quantile_bins(states[:, d], cfg.state_bins)
            abins = conditional_action_bins(states[:, d], actions, sbins, cfg.action_bins)
        except ValueError:
            value = float("nan")
        else:
            idx = sbins.bin_index(states[:, d])
            cdfs = [EmpiricalCdf(actions[idx == i]) for i in range(sbins.b)]
            value = discretization_error_volume(EmpiricalCdf(states[:, d]), cdfs, sbins, abins)
        rows.append({"term": "discretization_volume", "dim": d, "value": value})
    bound = pruning_bound(disc.stats.n_steps, env.r_max, cfg.gamma, disc.lattice.b_S, disc.lattice.b_A, cfg.delta)
    rows.append({"term": "pruning_bound", "dim": -1, "value": bound})
    rows.append({"term": "pruned_fraction", "dim": -1, "value": disc.pruned_fraction})
    return rows


# -- experiments -------------------------------------------------------------------

def cmd_experiment(cfg: ExperimentConfig, name: str):
    out = _out(cfg)
    if name == "turntable":
        rows = []
        for seed in cfg.seeds:
            rows += ex.turntable_w1(b_A=cfg.b_a or 100, seed=seed)
        return [write_csv(out / "turntable.csv", ["basis", "K", "seed", "w1"], rows, cfg)]
    if name == "pendulum":
        rows = []
        for seed in cfg.seeds:
            r = ex.pendulum_variance(cfg.state_bins if cfg.env == "pendulum" else 35, cfg.b_a or 15, cfg.sigma,
                                     cfg.n_trajectories, seed, cfg.binning, cfg.jitter, cfg.basis.upper())
            c = r["conditions"]
            rows.append({"seed": seed, "K": r["K"], "binning": r["binning"],
                         "mean_pi": r["stats_pi"].mean, "std_pi": r["stats_pi"].std,
                         "mean_hat": r["stats_hat"].mean, "std_hat": r["stats_hat"].std,
                         "condition1": c.condition1, "condition2": c.condition2, "condition3": c.condition3})
        header = ["seed", "K", "binning", "mean_pi", "std_pi", "mean_hat", "std_hat",
                  "condition1", "condition2", "condition3"]
        return [write_csv(out / "pendulum.csv", header, rows, cfg)]
    if name == "cmc":
        rows = ex.cmc_mle(cfg.b_s or 35, cfg.b_a or 10, cfg.sigma, cfg.seeds, cfg.n_trajectories, cfg.mle_samples,
                          binning=cfg.binning)
        rows.sort(key=lambda r: (r["method"], r["seed"]))
        return [write_csv(out / "cmc.csv", ["method", "seed", "mean_return"], rows, cfg)]
    if name == "chain":
        rows = ex.chain_bound_surface(cfg.chain_states, None if cfg.k == (10,) else sorted(set(cfg.k)),
                                      cfg.alpha, cfg.gamma)
        return [write_csv(out / "chain.csv", ["N", "K", "bound", "gap"], rows, cfg)]
    raise ConfigError(f"unknown experiment {name!r}")
