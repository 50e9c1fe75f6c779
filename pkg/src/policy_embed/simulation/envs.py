"""Vectorised steppers for the built-in control tasks.

Every environment works on batches: ``states`` has shape ``(n, state_dim)``
and ``actions`` shape ``(n,)``.  A single state is a batch of one.
"""

from __future__ import annotations

import numpy as np


def wrap_angle(theta):
    return (np.asarray(theta) + np.pi) % (2 * np.pi) - np.pi


class Environment:
    """Base stepper.  Subclasses set the class attributes below."""

    name = "env"
    state_low: np.ndarray
    state_high: np.ndarray
    action_low: float
    action_high: float
    r_max: float
    max_steps: int

    @property
    def state_dim(self) -> int:
        return len(self.state_low)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def step(self, states, actions, rng=None):
        """Return ``(next_states, rewards, done)`` for a batch."""
        raise NotImplementedError

    def _batch(self, states, actions):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        actions = np.asarray(actions, dtype=float).reshape(len(states))
        return states, actions


class Pendulum(Environment):
    """Torque-limited swing-up with ``theta = 0`` upright.

    ``theta'' = 3g/(2l) sin(theta) + 3u/(m l^2)`` with ``g=10, m=l=1``;
    semi-implicit Euler with ``dt = 0.05``.
    """

    name = "pendulum"
    g, m, l, dt = 10.0, 1.0, 1.0, 0.05
    max_speed, max_torque = 8.0, 2.0
    state_low = np.array([-np.pi, -8.0])
    state_high = np.array([np.pi, 8.0])
    action_low, action_high = -2.0, 2.0
    r_max = np.pi**2 + 0.1 * 8.0**2 + 0.001 * 2.0**2
    max_steps = 200

    def reset(self, rng):
        return np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.0, 1.0)])

    def step(self, states, actions, rng=None):
        states, u = self._batch(states, actions)
        u = np.clip(u, -self.max_torque, self.max_torque)
        th, thdot = states[:, 0], states[:, 1]
        reward = -(wrap_angle(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2)
        acc = 3 * self.g / (2 * self.l) * np.sin(th) + 3.0 / (self.m * self.l**2) * u
        thdot = np.clip(thdot + acc * self.dt, -self.max_speed, self.max_speed)
        th = wrap_angle(th + thdot * self.dt)
        return np.column_stack([th, thdot]), reward, np.zeros(len(u), dtype=bool)


class MountainCar(Environment):
    """Continuous mountain car: +100 on reaching ``x >= 0.45``, ``-0.1 u^2`` per step."""

    name = "cmc"
    power, goal = 0.0015, 0.45
    state_low = np.array([-1.2, -0.07])
    state_high = np.array([0.6, 0.07])
    action_low, action_high = -1.0, 1.0
    r_max = 100.0
    max_steps = 999

    def reset(self, rng):
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def step(self, states, actions, rng=None):
        states, u = self._batch(states, actions)
        force = np.clip(u, self.action_low, self.action_high)
        x, v = states[:, 0], states[:, 1]
        v = np.clip(v + force * self.power - 0.0025 * np.cos(3 * x), -0.07, 0.07)
        x = np.clip(x + v, -1.2, 0.6)
        v = np.where((x == -1.2) & (v < 0), 0.0, v)
        done = (x >= self.goal) & (v >= 0)
        reward = np.where(done, 100.0, 0.0) - 0.1 * force**2
        return np.column_stack([x, v]), reward, done


class BanditTurntable(Environment):
    """One-step bandit over angles in ``[-pi, pi]``.

    The reward is a sum of von Mises bumps ``w_m exp(kappa (cos(a - mu_m) - 1))``
    at equally spaced centres plus a noise field drawn once per seed on a
    periodic grid and linearly interpolated.
    """

    name = "turntable"
    state_low = np.array([-0.5])
    state_high = np.array([0.5])
    action_low, action_high = -np.pi, np.pi
    max_steps = 1

    def __init__(self, centers, weights, kappa, noise_grid, noise):
        self.centers = np.asarray(centers, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.kappa = float(kappa)
        self.noise_grid = np.asarray(noise_grid, dtype=float)
        self.noise = np.asarray(noise, dtype=float)
        self.r_max = float(self.weights.sum() + np.abs(self.noise).max(initial=0.0))

    def signal(self, a):
        a = np.asarray(a, dtype=float)[..., None]
        return np.sum(self.weights * np.exp(self.kappa * (np.cos(a - self.centers) - 1.0)), axis=-1)

    def reward(self, a):
        a = np.asarray(a, dtype=float)
        if not self.noise.size:
            return self.signal(a)
        u = np.interp(wrap_angle(a), self.noise_grid, self.noise, period=2 * np.pi)
        return self.signal(a) + u

    def reset(self, rng):
        return np.zeros(1)

    def step(self, states, actions, rng=None):
        states, a = self._batch(states, actions)
        return states.copy(), self.reward(a), np.ones(len(a), dtype=bool)


class DiscreteBandit:
    """``N``-armed bandit, ``r(i) = phi(i - N/2) + U_i`` with ``Var(U) = lambda^2``.

    ``phi`` is the standard normal density; arms are numbered ``1..N``.
    """

    def __init__(self, n_arms: int, lambda_noise: float):
        if n_arms < 2:
            raise ValueError("need at least two arms")
        if lambda_noise < 0:
            raise ValueError("lambda_noise must be nonnegative")
        self.n_arms = int(n_arms)
        self.lambda_noise = float(lambda_noise)
        self.arms = np.arange(1, n_arms + 1)
        self.signal = np.exp(-((self.arms - n_arms / 2) ** 2) / 2) / np.sqrt(2 * np.pi)

    @classmethod
    def from_snr(cls, n_arms: int, snr: float) -> "DiscreteBandit":
        return cls(n_arms, n_arms / (2.0 * snr))

    @property
    def snr(self) -> float:
        return np.inf if self.lambda_noise == 0 else self.n_arms / (2.0 * self.lambda_noise)

    def measure(self, rng: np.random.Generator) -> np.ndarray:
        """One noisy reading of every arm."""
        return self.signal + rng.normal(0.0, self.lambda_noise, size=self.n_arms)

    def expected_reward(self, arm_index) -> np.ndarray:
        """Noise-free reward of 0-based arm indices."""
        return self.signal[np.asarray(arm_index)]


def make_pendulum() -> Pendulum:
    return Pendulum()


def make_mountain_car() -> MountainCar:
    return MountainCar()
