from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from ..lattice import Trajectory, VisitationStats
from .policies import state_bin_index

ACTION_SLACK = 1e-9


class RolloutResult(NamedTuple):
    trajectories: list
    stats: Optional[VisitationStats]
    returns: np.ndarray


def trajectory_rngs(seed: int, n_traj: int) -> list:
    """One independent generator per trajectory, derived from ``(seed, i)``."""
    return [np.random.default_rng([int(seed), i]) for i in range(n_traj)]


def _sample(policy, states, rngs):
    batch = getattr(policy, "sample_batch", None)
    if batch is not None:
        return np.asarray(batch(states, rngs), dtype=float)
    return np.array([policy.sample(s[0] if s.shape == (1,) else s, g) for s, g in zip(states, rngs)], dtype=float)


def rollout(env, policy, n_traj: int, max_steps: Optional[int] = None, seed: int = 0,
            state_bins=None, action_bins=None) -> RolloutResult:
    """Run ``n_traj`` episodes of ``policy`` in ``env``.

    Trajectory ``i`` uses its own generator seeded by ``(seed, i)``, so the
    result does not depend on how episodes are batched.  Returns are
    undiscounted.  Visitation statistics are collected when both bin sets
    are given.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    max_steps = env.max_steps if max_steps is None else int(max_steps)
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    rngs = trajectory_rngs(seed, n_traj)
    states = np.stack([np.asarray(env.reset(g), dtype=float) for g in rngs])
    d = states.shape[1]
    S = np.zeros((max_steps, n_traj, d))
    A = np.zeros((max_steps, n_traj))
    R = np.zeros((max_steps, n_traj))
    lengths = np.zeros(n_traj, dtype=int)
    active = np.ones(n_traj, dtype=bool)
    for t in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        actions = _sample(policy, states[idx], [rngs[i] for i in idx])
        bad = ~np.isfinite(actions) | (actions < env.action_low - ACTION_SLACK) | (
            actions > env.action_high + ACTION_SLACK
        )
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"policy produced action {actions[k]!r} outside [{env.action_low}, {env.action_high}]"
            )
        nxt, reward, done = env.step(states[idx], actions)
        S[t, idx] = states[idx]
        A[t, idx] = actions
        R[t, idx] = reward
        lengths[idx] += 1
        states[idx] = nxt
        active[idx[done]] = False
    trajectories = [Trajectory(S[: lengths[i], i], A[: lengths[i], i], R[: lengths[i], i]) for i in range(n_traj)]
    returns = np.array([tr.total_reward for tr in trajectories])
    stats = None
    if state_bins is not None and action_bins is not None:
        all_s = np.concatenate([tr.states for tr in trajectories])
        all_a = np.concatenate([tr.actions for tr in trajectories])
        stats = VisitationStats.from_indices(
            state_bin_index(state_bins, all_s), action_bins.bin_index(all_a), state_bins.b, action_bins.b, n_traj
        )
    return RolloutResult(trajectories, stats, returns)
