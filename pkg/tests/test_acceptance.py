"""One test per acceptance criterion; each records a PASS/FAIL summary line.

Criteria whose measured outcome misses the target are marked strict xfail:
the line still reads FAIL and the test turns red if the outcome changes.
"""

import time

import numpy as np
import pytest

from policy_embed import experiments as ex
from policy_embed.cli import main
from policy_embed.lattice import LatticePolicy
from policy_embed.spectral import inverse_transform, project, reconstruct

from conftest import ACCEPTANCE_LINES, random_lattice_probs


def report(n, title, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    return ok


def test_criterion_01_perfect_reconstruction():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        m, n = (int(x) for x in rng.integers(1, 65, size=2))
        lat = LatticePolicy(random_lattice_probs(rng, m, n))
        for basis in ("DFT", "HAAR", "DB4", "SVD"):
            emb = project(lat, basis, ex.full_budget(basis, lat.shape))
            worst = max(worst, float(np.abs(inverse_transform(emb) - lat.probs).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 30
    assert report(1, "full-K round trip", ok, f"max error {worst:.2e}, {elapsed:.1f} s")


def test_criterion_02_eckart_young():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        m, n = (int(x) for x in rng.integers(2, 40, size=2))
        P = random_lattice_probs(rng, m, n)
        sv = np.linalg.svd(P, compute_uv=False)
        for K in range(1, min(m, n) + 1):
            err = np.linalg.norm(inverse_transform(project(LatticePolicy(P), "SVD", K)) - P)
            worst = max(worst, abs(err - np.sqrt(np.sum(sv[K:] ** 2))))
    assert report(2, "Eckart-Young", worst < 1e-8, f"max deviation {worst:.2e}")


def test_criterion_03_coverage_certification():
    t0 = time.perf_counter()
    rows = ex.coverage_certification(200, seed=0)
    held = sum(r["bound_holds"] for r in rows)
    surface = ex.chain_bound_surface()
    monotone = True
    for N in {r["N"] for r in surface}:
        b = np.array([r["bound"] for r in surface if r["N"] == N])
        monotone &= bool(np.all(np.diff(b) <= 1e-9 * max(1.0, b.max())))
        assert all(r["gap"] <= r["bound"] + 1e-12 for r in surface if r["N"] == N)
    elapsed = time.perf_counter() - t0
    ok = held == 200 and monotone and elapsed < 120
    assert report(3, "coverage bound", ok, f"{held}/200 random MDPs, chain surface monotone={monotone}, {elapsed:.1f} s")


def test_criterion_04_pruning_certification():
    t0 = time.perf_counter()
    rows = ex.pruning_certification(200, delta=0.1, seed=0)
    rate = np.mean([r["bound_holds"] for r in rows])
    elapsed = time.perf_counter() - t0
    ok = rate >= 0.8 and elapsed < 120
    assert report(4, "pruning bound", ok, f"holds in {rate:.0%} of 200 MDPs, {elapsed:.1f} s")


@pytest.mark.xfail(strict=True, reason="fails at K in {1..4, 6}; analysis in the decisions ledger")
def test_criterion_05_bandit_denoising():
    rows, snr = ex.bandit_denoising(100, 2.5)
    rates = {}
    for K in range(1, 11):
        sel = [r for r in rows if r["K"] == K]
        rates[K] = np.mean([r["reward_truncated"] >= r["reward_noisy"] for r in sel])
    ok = snr == 2.5 and all(v >= 0.8 for v in rates.values())
    detail = "rate per K " + " ".join(f"{K}:{v:.2f}" for K, v in rates.items())
    assert report(5, "bandit denoising (every K <= 10)", ok, detail)


def test_criterion_06_turntable_plateau():
    rows = ex.turntable_w1(em_ks=())
    dft = {r["K"]: r["w1"] for r in rows if r["basis"] == "DFT"}
    ks = sorted(dft)
    monotone = all(dft[b] <= dft[a] + 1e-6 for a, b in zip(ks, ks[1:]))
    plateau = abs(dft[20] - dft[100]) <= 0.1 * dft[100]
    fgmm20 = np.mean([r["w1"] for r in rows if r["basis"] == "FGMM" and r["K"] == 20])
    ok = monotone and plateau and fgmm20 > dft[20]
    detail = f"DFT W1 K=20 {dft[20]:.4g}, K=100 {dft[100]:.4g}, fixed-basis GMM K=20 {fgmm20:.4g}"
    assert report(6, "turntable W1 plateau", ok, detail)


@pytest.mark.xfail(strict=True, reason="truncated policy spreads returns more; analysis in the decisions ledger")
def test_criterion_07_variance_direction():
    out = ex.pendulum_variance()
    c = out["conditions"]
    s_pi, s_hat = out["stats_pi"].std, out["stats_hat"].std
    ok = c.condition1 and c.condition2 and s_hat <= 1.05 * s_pi
    detail = (f"K={out['K']}, std pi {s_pi:.1f}, std pi_hat {s_hat:.1f}, "
              f"condition1={c.condition1}, condition2={c.condition2}")
    assert report(7, "variance direction", ok, detail)


def test_criterion_08_mle_anchoring():
    rows = ex.cmc_mle()
    mle = np.array([r["mean_return"] for r in rows if r["method"] == "MLE"])
    centre, se = mle.mean(), mle.std(ddof=1) / np.sqrt(len(mle))
    means = {b: np.mean([r["mean_return"] for r in rows if r["method"] == b]) for b in ("DFT", "SVD", "DB4")}
    ok = all(abs(m - centre) <= 2 * se for m in means.values())
    detail = f"MLE {centre:.2f} +/- {2 * se:.2f}; " + ", ".join(f"{b} {m:.2f}" for b, m in means.items())
    assert report(8, "MLE anchoring", ok, detail)


def test_criterion_09_fourier_rate():
    _, slope = ex.fourier_rate()
    assert report(9, "Fourier rate", slope <= -0.8, f"log-log slope {slope:.2f}")


def test_criterion_10_cli_determinism(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nenv = pendulum\nb_s = 6\nb_a = 5\nn_trajectories = 6\nmax_steps = 60\nk = 2,5\n")
    chain = tmp_path / "chain.ini"
    chain.write_text("[run]\nenv = chain\nchain_states = 5,10\nn_mdps = 10\n")
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        for cmd in ("discretize", "prune", "embed", "evaluate", "bound"):
            assert main([cmd, "--config", str(ini), "--out", str(out), "--seed", "2"]) == 0
        assert main(["bound", "--config", str(chain), "--out", str(out / "chain")]) == 0
        assert main(["experiment", "chain", "--config", str(chain), "--out", str(out / "chain")]) == 0
        files = sorted(p for p in out.rglob("*") if p.is_file())
        digests.append({p.relative_to(out).as_posix(): p.read_bytes() for p in files})
    same = digests[0] == digests[1]
    assert report(10, "CLI determinism", same, f"{len(digests[0])} files byte-identical={same}")
