import numpy as np
import pytest
from scipy import stats

from policy_embed.lattice import BinEdges, LatticePolicy, VisitationStats
from policy_embed.prune import prune_policy
from policy_embed.simulation import (
    DiscreteBandit,
    LatticeAgent,
    SyntheticPolicy,
    UniformPolicy,
    act_embedded,
    make_mountain_car,
    make_mountain_car_policy,
    make_pendulum,
    make_pendulum_policy,
    make_turntable,
    mountain_car_controller,
    rollout,
    wrap_angle,
)


def test_pendulum_rest_is_fixed_point():
    env = make_pendulum()
    s = np.array([[np.pi, 0.0]])
    for _ in range(200):
        s, r, _ = env.step(s, np.zeros(1))
    assert abs(abs(wrap_angle(s[0, 0])) - np.pi) < 1e-9 and abs(s[0, 1]) < 1e-9


def test_pendulum_rewards_nonpositive_and_speed_clipped(rng):
    env = make_pendulum()
    res = rollout(env, UniformPolicy(-2, 2), 5, seed=3)
    for tr in res.trajectories:
        assert np.all(tr.rewards <= 0) and np.all(np.abs(tr.states[:, 1]) <= 8)
        assert len(tr) == 200


def test_pendulum_controller_beats_random():
    env = make_pendulum()
    good = rollout(env, make_pendulum_policy(0.3), 100, seed=0).returns.mean()
    rand = rollout(env, UniformPolicy(-2, 2), 100, seed=0).returns.mean()
    assert good > rand


def test_mountain_car_idle_never_reaches_goal():
    env = make_mountain_car()
    s = np.array([[-np.pi / 6, 0.0]])  # valley bottom, where cos(3x) = 0
    for _ in range(999):
        s, _, done = env.step(s, np.zeros(1))
        assert not done[0]


def test_mountain_car_bang_bang_reaches_goal():
    env = make_mountain_car()
    policy = SyntheticPolicy(mountain_car_controller, 0.0, -1.0, 1.0)
    res = rollout(env, policy, 100, seed=0)
    reached = [len(tr) < 999 for tr in res.trajectories]
    assert np.mean(reached) >= 0.9


def test_mountain_car_state_ranges():
    env = make_mountain_car()
    res = rollout(env, UniformPolicy(-1, 1), 5, max_steps=300, seed=1)
    S = np.concatenate([tr.states for tr in res.trajectories])
    assert S[:, 0].min() >= -1.2 and S[:, 0].max() <= 0.6 and np.abs(S[:, 1]).max() <= 0.07


def test_rollout_contract_and_determinism():
    env = make_pendulum()
    a = rollout(env, make_pendulum_policy(), 7, max_steps=30, seed=4)
    b = rollout(env, make_pendulum_policy(), 7, max_steps=30, seed=4)
    assert len(a.returns) == 7 and all(len(t) <= 30 for t in a.trajectories)
    assert all(np.array_equal(x.states, y.states) and np.array_equal(x.actions, y.actions)
               for x, y in zip(a.trajectories, b.trajectories))
    # batching does not change a trajectory: the first 3 of 7 equal a run of 3
    c = rollout(env, make_pendulum_policy(), 3, max_steps=30, seed=4)
    assert np.array_equal(a.returns[:3], c.returns)
    d = rollout(env, make_pendulum_policy(), 7, max_steps=30, seed=5)
    assert not np.array_equal(a.returns, d.returns)


def test_zero_variance_policy_gives_identical_trajectories():
    env = make_mountain_car()

    policy = SyntheticPolicy(mountain_car_controller, 0.0, -1.0, 1.0)
    env.reset = lambda rng: np.array([-0.5, 0.0])
    res = rollout(env, policy, 4, max_steps=50, seed=0)
    assert all(np.array_equal(res.trajectories[0].states, t.states) for t in res.trajectories)


def test_rollout_rejects_out_of_range_actions():
    class Wild:
        def sample(self, state, rng):
            return 5.0

    with pytest.raises(ValueError, match="outside"):
        rollout(make_pendulum(), Wild(), 2, max_steps=3)


def test_rollout_visitation_stats():
    env = make_pendulum()
    sb = BinEdges.uniform(-np.pi, np.pi, 6)
    ab = BinEdges.uniform(-2, 2, 5)
    res = rollout(env, make_pendulum_policy(), 4, max_steps=20, seed=0, state_bins=sb, action_bins=ab)
    assert res.stats.n_steps == 80 and abs(res.stats.rho.sum() - 1) < 1e-12


def test_synthetic_density_integrates_to_one():
    policy = make_pendulum_policy(0.5)
    a = np.linspace(-2, 2, 20001)
    for s in ([0.1, 0.0], [3.0, 1.0], [1.0, -6.0]):
        dens = policy.density_table(np.array([s]), a)[0]
        assert abs(np.trapezoid(dens, a) - 1) < 1e-6


def test_one_hot_row_stays_in_bin(rng):
    ab = BinEdges.uniform(-1, 1, 4)
    pi = LatticePolicy([[0.0, 0.0, 1.0, 0.0]], BinEdges([0.0, 1.0]), ab)
    acts = [act_embedded(pi, [0.5], rng, jitter=True) for _ in range(200)]
    assert min(acts) >= 0.0 and max(acts) <= 0.5
    assert act_embedded(pi, [7.0], rng) == 0.25  # clamped state, midpoint action


def test_uniform_row_frequencies(rng):
    ab = BinEdges.uniform(0, 5, 5)
    pi = LatticePolicy([[0.2] * 5], BinEdges([0.0, 1.0]), ab)
    agent = LatticeAgent(pi)
    rngs = [np.random.default_rng([11, i]) for i in range(100_000)]
    acts = agent.sample_batch(np.zeros((100_000, 1)), rngs)
    counts = np.bincount(ab.bin_index(acts), minlength=5)
    sd = np.sqrt(100_000 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 20_000) < 4 * sd)
    assert stats.chisquare(counts).pvalue > 0.01


def test_jitter_uniform_within_bin():
    ab = BinEdges([0.0, 1.0, 3.0])
    pi = LatticePolicy([[0.0, 1.0]], BinEdges([0.0, 1.0]), ab)
    agent = LatticeAgent(pi, jitter=True)
    rngs = [np.random.default_rng([5, i]) for i in range(5000)]
    acts = agent.sample_batch(np.zeros((5000, 1)), rngs)
    assert stats.kstest(acts, stats.uniform(loc=1.0, scale=2.0).cdf).pvalue > 0.01


def test_pruned_rows_act_uniformly():
    counts = np.array([[5, 0, 0], [0, 0, 0]])
    pruned = prune_policy(VisitationStats(np.array([1.0, 0.0]), counts, 1), 3,
                          state_bins=BinEdges([0.0, 1.0, 2.0]), action_bins=BinEdges.uniform(0, 3, 3))
    rngs = [np.random.default_rng([2, i]) for i in range(30_000)]
    acts = LatticeAgent(pruned).sample_batch(np.full((30_000, 1), 1.5), rngs)
    counts = np.bincount(pruned.base.action_bins.bin_index(acts), minlength=3)
    assert stats.chisquare(counts).pvalue > 0.01


def test_turntable_single_mode_is_unimodal():
    env, dens = make_turntable(n_modes=1, lambda_noise=0.0)
    a = np.linspace(-np.pi, np.pi, 4001)
    p = dens.pdf(a)
    peak = int(np.argmax(p))
    assert abs(a[peak] - env.centers[0]) < 2e-3
    assert np.all(np.diff(p[: peak + 1]) >= -1e-15) and np.all(np.diff(p[peak:]) <= 1e-15)
    assert abs(np.trapezoid(dens.pdf(dens.grid), dens.grid) - 1) < 1e-12


def test_turntable_noise_is_seeded():
    a = np.linspace(-3, 3, 11)
    r1 = make_turntable(lambda_noise=0.5, seed=1)[0].reward(a)
    r2 = make_turntable(lambda_noise=0.5, seed=1)[0].reward(a)
    r3 = make_turntable(lambda_noise=0.5, seed=2)[0].reward(a)
    assert np.array_equal(r1, r2) and not np.array_equal(r1, r3)


def test_discrete_bandit_snr():
    b = DiscreteBandit.from_snr(100, 2.5)
    assert b.lambda_noise == pytest.approx(20.0) and b.snr == pytest.approx(2.5)
    assert b.expected_reward(49) == pytest.approx(1 / np.sqrt(2 * np.pi))


def test_mountain_car_policy_stays_in_range(rng):
    policy = make_mountain_car_policy(1.0)
    acts = [policy.sample(np.array([-0.5, 0.01]), rng) for _ in range(500)]
    assert min(acts) >= -1 and max(acts) <= 1
