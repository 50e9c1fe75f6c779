"""Policy oracles for the built-in tasks and agents that act from lattices.

Every policy here draws its randomness from one generator per trajectory,
and ``sample`` is ``sample_batch`` on a batch of one, so batched and
one-at-a-time rollouts consume identical random streams.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

from ..lattice import BinEdges, LatticePolicy, ProductBins
from .envs import BanditTurntable, MountainCar, Pendulum, wrap_angle


def _uniforms(rngs) -> np.ndarray:
    return np.array([g.random() for g in rngs])


class _BatchSampler:
    def sample(self, state, rng):
        state = np.atleast_1d(np.asarray(state, dtype=float))
        return float(self.sample_batch(state[None, :], [rng])[0])


class SyntheticPolicy(_BatchSampler):
    """Gaussian around a controller mean, truncated to ``[low, high]``.

    ``mean_fn`` maps an ``(n, d)`` batch of states to ``n`` means, which are
    clipped to the action range.  ``sigma`` is a constant or a function of
    the state batch.  ``sigma = 0`` gives the deterministic controller.
    """

    def __init__(self, mean_fn, sigma, low: float, high: float, name: str = "synthetic"):
        if not low < high:
            raise ValueError("need low < high")
        self.mean_fn = mean_fn
        self.sigma = sigma
        self.low = float(low)
        self.high = float(high)
        self.name = name

    def _params(self, states):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        mu = np.clip(np.asarray(self.mean_fn(states), dtype=float).reshape(len(states)), self.low, self.high)
        sigma = self.sigma(states) if callable(self.sigma) else self.sigma
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mu.shape)
        if np.any(sigma < 0):
            raise ValueError("sigma must be nonnegative")
        return mu, sigma

    def density_table(self, states, actions) -> np.ndarray:
        mu, sigma = self._params(states)
        if np.any(sigma == 0):
            raise ValueError("a zero-variance policy has no density")
        a = np.asarray(actions, dtype=float)[None, :]
        mu, sigma = mu[:, None], sigma[:, None]
        z = (a - mu) / sigma
        mass = ndtr((self.high - mu) / sigma) - ndtr((self.low - mu) / sigma)
        dens = np.exp(-0.5 * z**2) / (np.sqrt(2 * np.pi) * sigma * mass)
        return np.where((a >= self.low) & (a <= self.high), dens, 0.0)

    def density(self, state, action) -> float:
        state = np.atleast_1d(np.asarray(state, dtype=float))
        return float(self.density_table(state[None, :], [action])[0, 0])

    def mean(self, states) -> np.ndarray:
        return self._params(states)[0]

    def sample_batch(self, states, rngs) -> np.ndarray:
        mu, sigma = self._params(states)
        u = _uniforms(rngs)
        out = mu.copy()
        live = sigma > 0
        if np.any(live):
            m, s = mu[live], sigma[live]
            lo, hi = ndtr((self.low - m) / s), ndtr((self.high - m) / s)
            p = np.clip(lo + u[live] * (hi - lo), 1e-300, 1 - 1e-16)
            out[live] = m + s * ndtri(p)
        return np.clip(out, self.low, self.high)


class UniformPolicy(_BatchSampler):
    def __init__(self, low: float, high: float):
        self.low, self.high = float(low), float(high)

    def density_table(self, states, actions):
        a = np.asarray(actions, dtype=float)
        row = np.where((a >= self.low) & (a <= self.high), 1.0 / (self.high - self.low), 0.0)
        return np.tile(row, (len(np.atleast_2d(states)), 1))

    def density(self, state, action):
        return float(self.density_table(np.zeros((1, 1)), [action])[0, 0])

    def sample_batch(self, states, rngs):
        return self.low + (self.high - self.low) * _uniforms(rngs)


class BoltzmannDensity(_BatchSampler):
    """State-free density ``exp(r(a) / T) / Z`` on ``[low, high]``.

    ``Z`` is the trapezoid integral over ``n_grid`` equally spaced points;
    sampling inverts the tabulated trapezoid CDF.
    """

    def __init__(self, reward_fn, temperature: float = 1.0, low: float = -np.pi,
                 high: float = np.pi, n_grid: int = 2048):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        self.reward_fn = reward_fn
        self.temperature = float(temperature)
        self.low, self.high = float(low), float(high)
        self.grid = np.linspace(low, high, n_grid)
        logits = np.asarray(reward_fn(self.grid), dtype=float) / self.temperature
        self._shift = float(logits.max())
        vals = np.exp(logits - self._shift)
        self._z = float(np.trapezoid(vals, self.grid))
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(self.grid))])
        self._cdf = cdf / cdf[-1]

    def pdf(self, actions) -> np.ndarray:
        a = np.asarray(actions, dtype=float)
        logits = np.asarray(self.reward_fn(a), dtype=float) / self.temperature
        return np.where((a >= self.low) & (a <= self.high), np.exp(logits - self._shift) / self._z, 0.0)

    def density_table(self, states, actions):
        return np.tile(self.pdf(actions), (len(np.atleast_2d(states)), 1))

    def density(self, state, action):
        return float(self.pdf(action))

    def sample_batch(self, states, rngs):
        return np.interp(_uniforms(rngs), self._cdf, self.grid)


def boltzmann(values, temperature: float = 1.0) -> np.ndarray:
    """Softmax pmf ``exp(v / T) / sum exp(v / T)``."""
    z = np.asarray(values, dtype=float) / temperature
    w = np.exp(z - z.max())
    return w / w.sum()


# -- controllers ----------------------------------------------------------------

def pendulum_controller(states) -> np.ndarray:
    """Energy-pumping swing-up that hands over to PD balance near the top."""
    states = np.atleast_2d(states)
    th, thdot = wrap_angle(states[:, 0]), states[:, 1]
    energy = 0.5 * thdot**2 + 15.0 * np.cos(th)
    pump = np.clip(1.0 * (15.0 - energy) * thdot, -2.0, 2.0)
    pump = np.where(np.abs(thdot) < 1e-3, 2.0, pump)
    balance = -(10.0 * th + 2.0 * thdot)
    return np.where(np.abs(th) < 0.4, balance, pump)


def mountain_car_controller(states) -> np.ndarray:
    """Push along the velocity to pump energy (bang-bang)."""
    states = np.atleast_2d(states)
    return np.where(states[:, 1] >= 0, 1.0, -1.0)


def make_pendulum_policy(sigma: float = 0.3) -> SyntheticPolicy:
    return SyntheticPolicy(pendulum_controller, sigma, Pendulum.action_low, Pendulum.action_high, "pendulum")


def make_mountain_car_policy(sigma: float = 0.3) -> SyntheticPolicy:
    return SyntheticPolicy(mountain_car_controller, sigma, MountainCar.action_low, MountainCar.action_high, "cmc")


def make_turntable(n_modes: int = 3, lambda_noise: float = 0.0, temperature: float = 1.0, seed: int = 0,
                   kappa: float = 4.0, peak: float = 3.0, n_grid: int = 2048):
    """Turntable bandit and its Boltzmann policy.

    Mode ``m`` sits at ``-pi + 2 pi (m + 1/2) / n_modes`` with height
    ``peak (m + 1) / n_modes``.  The noise field has standard deviation
    ``lambda_noise`` on ``n_grid`` periodic points drawn from ``seed``.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    m = np.arange(n_modes)
    centers = -np.pi + 2 * np.pi * (m + 0.5) / n_modes
    weights = peak * (m + 1) / n_modes
    noise_grid = np.linspace(-np.pi, np.pi, n_grid, endpoint=False)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, lambda_noise, n_grid) if lambda_noise > 0 else np.zeros(0)
    env = BanditTurntable(centers, weights, kappa, noise_grid, noise)
    return env, BoltzmannDensity(env.reward, temperature, -np.pi, np.pi, n_grid)


# -- acting from lattices -------------------------------------------------------

def state_bin_index(bins, states) -> np.ndarray:
    """Bin of every state in an ``(n, d)`` batch; out-of-range values clamp."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if isinstance(bins, ProductBins):
        return np.atleast_1d(bins.bin_index(states))
    return np.atleast_1d(bins.bin_index(states[:, 0]))


def _act(lattice: LatticePolicy, states, rngs, jitter: bool) -> np.ndarray:
    rows = state_bin_index(lattice.state_bins, states)
    cum = np.cumsum(lattice.probs[rows], axis=1)
    u = _uniforms(rngs) * cum[:, -1]
    j = np.minimum((cum <= u[:, None]).sum(axis=1), lattice.b_A - 1)
    edges = lattice.action_bins.edges
    if not jitter:
        return 0.5 * (edges[j] + edges[j + 1])
    lo, hi = edges[j], edges[j + 1]
    return np.clip(lo + (hi - lo) * _uniforms(rngs), lo, hi)


def act_embedded(lattice, raw_state, rng: np.random.Generator, jitter: bool = False) -> float:
    """Sample an action for one raw state from a lattice (or pruned) policy.

    The state is located by edge search, an action bin is drawn from the
    row pmf, and the bin midpoint is returned; with ``jitter`` the action is
    instead uniform between the bin's edges.
    """
    lattice = getattr(lattice, "base", lattice)
    state = np.atleast_1d(np.asarray(raw_state, dtype=float))
    return float(_act(lattice, state[None, :], [rng], jitter)[0])


class LatticeAgent(_BatchSampler):
    """Acts from a lattice policy via :func:`act_embedded`."""

    def __init__(self, lattice, jitter: bool = False):
        self.lattice = getattr(lattice, "base", lattice)
        self.jitter = bool(jitter)
        self.low = float(self.lattice.action_bins.edges[0])
        self.high = float(self.lattice.action_bins.edges[-1])

    def sample_batch(self, states, rngs):
        return _act(self.lattice, states, rngs, self.jitter)


def uniform_action_bins(env, b_A: int) -> BinEdges:
    return BinEdges.uniform(env.action_low, env.action_high, b_A)
