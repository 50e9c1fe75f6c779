"""Exact computations on tabular MDPs: evaluation, occupancy and perturbation bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

STOCH_TOL = 1e-12


class ConvergenceError(ArithmeticError):
    """Iterative solve did not reach its residual target."""


def _frozen(a):
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite MDP with transition tensor ``T[s, a, s']`` and rewards ``R[s, a]``."""

    T: np.ndarray
    R: np.ndarray
    gamma: float
    beta: np.ndarray = None

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 3 or T.shape[0] != T.shape[2]:
            raise ValueError(f"T must have shape (S, A, S), got {T.shape}")
        if np.any(T < 0) or np.any(np.abs(T.sum(axis=2) - 1) > STOCH_TOL):
            raise ValueError("every T[s, a, :] must be a probability vector")
        R = np.asarray(self.R, dtype=float)
        if R.shape != T.shape[:2] or not np.all(np.isfinite(R)):
            raise ValueError("R must be a finite (S, A) table")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        beta = np.full(T.shape[0], 1.0 / T.shape[0]) if self.beta is None else np.asarray(self.beta, float)
        if beta.shape != (T.shape[0],) or np.any(beta < 0) or abs(beta.sum() - 1) > 1e-12:
            raise ValueError("beta must be a probability vector over states")
        object.__setattr__(self, "T", _frozen(T))
        object.__setattr__(self, "R", _frozen(R))
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_states(self) -> int:
        return self.T.shape[0]

    @property
    def n_actions(self) -> int:
        return self.T.shape[1]

    @property
    def r_max(self) -> float:
        return float(np.abs(self.R).max())


@dataclass(frozen=True, eq=False)
class PolicyMatrix:
    """``Pi[a, s] = pi(a | s)``; columns are action distributions."""

    Pi: np.ndarray

    def __post_init__(self):
        Pi = np.asarray(self.Pi, dtype=float)
        if Pi.ndim != 2:
            raise ValueError("Pi must be an (A, S) matrix")
        if np.any(Pi < 0) or np.any(np.abs(Pi.sum(axis=0) - 1) > STOCH_TOL):
            raise ValueError("every column of Pi must be a probability vector")
        object.__setattr__(self, "Pi", _frozen(Pi))

    @classmethod
    def from_lattice(cls, probs) -> "PolicyMatrix":
        """From a ``states x actions`` table (a lattice policy)."""
        return cls(np.asarray(getattr(probs, "probs", probs), dtype=float).T)

    @property
    def table(self) -> np.ndarray:
        """``states x actions`` view."""
        return self.Pi.T


def _check_shapes(mdp: TabularMDP, policy: PolicyMatrix):
    if policy.Pi.shape != (mdp.n_actions, mdp.n_states):
        raise ValueError(
            f"policy shape {policy.Pi.shape} does not match MDP (A={mdp.n_actions}, S={mdp.n_states})"
        )


def expected_transition(mdp: TabularMDP, policy: PolicyMatrix) -> np.ndarray:
    """State-to-state matrix ``P[s, s'] = sum_a pi(a|s) T[s, a, s']``."""
    _check_shapes(mdp, policy)
    return np.einsum("as,sat->st", policy.Pi, mdp.T)


def is_irreducible(P) -> bool:
    n_comp, _ = connected_components(np.asarray(P) > 0, directed=True, connection="strong")
    return n_comp == 1


def _residual(rho, P) -> float:
    return float(np.abs(rho @ P - rho).sum())


def _power(P, rho, n_squarings=64):
    """Power iteration accelerated by repeated squaring of the step matrix."""
    Q = np.array(P, dtype=float)
    res = _residual(rho, P)
    for _ in range(n_squarings):
        rho = rho @ Q
        rho /= rho.sum()
        res = _residual(rho, P)
        if res < 1e-13:
            break
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
    return rho, res


def _polish(rho, P, steps=16):
    res = _residual(rho, P)
    for _ in range(steps):
        if res < 1e-13:
            break
        rho = rho @ P
        rho /= rho.sum()
        res = _residual(rho, P)
    return rho, res


def stationary_distribution(P) -> np.ndarray:
    """Left Perron vector ``rho`` of a row-stochastic ``P`` (``rho P = rho``).

    Periodic chains oscillate under plain power iteration; when that happens
    the iteration is rerun on the lazy chain ``(I + P) / 2``, which is
    aperiodic and has the same stationary vector.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.ndim != 2 or P.shape[1] != n:
        raise ValueError("P must be square")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-10):
        raise ValueError("P must be row-stochastic")
    rho0 = np.full(n, 1.0 / n)
    rho, res = _polish(_power(P, rho0)[0], P)
    if res >= 1e-12:
        lazy = 0.5 * (np.eye(n) + P)
        rho, res = _polish(_power(lazy, rho0)[0], P)
    if res >= 1e-12:
        raise ConvergenceError(f"stationary distribution did not converge (residual {res:.3e})")
    return _refine(rho, P)


def _refine(rho, P):
    """One correction step: solve ``d (I - P + 1 rho^T) = rho P - rho``."""
    n = P.shape[0]
    try:
        d = np.linalg.solve((np.eye(n) - P + np.outer(np.ones(n), rho)).T, rho @ P - rho)
    except np.linalg.LinAlgError:
        return rho
    cand = np.clip(rho + d, 0.0, None)
    cand /= cand.sum()
    return cand if _residual(cand, P) <= _residual(rho, P) else rho


def fundamental_matrix(P, rho) -> np.ndarray:
    """``Z = (I - P + 1 rho^T)^{-1}``."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.eye(n) - P + np.outer(np.ones(n), rho)
    try:
        Z = np.linalg.solve(A, np.eye(n))
    except np.linalg.LinAlgError:
        raise ConvergenceError("I - P + 1 rho^T is singular") from None
    if np.abs(Z @ A - np.eye(n)).max() > 1e-10:
        raise ConvergenceError("fundamental matrix is numerically singular")
    return Z


def schatten_norm(M, p) -> float:
    """Schatten norm for ``p`` in ``{1, 2, inf}``."""
    s = np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=float)), compute_uv=False)
    if p == 1:
        return float(s.sum())
    if p == 2:
        return float(np.sqrt(np.sum(s**2)))
    if p in (np.inf, "inf", float("inf")):
        return float(s.max()) if s.size else 0.0
    raise ValueError(f"unsupported Schatten order {p!r}")


def matricize(T, mode: int = 3) -> np.ndarray:
    """Unfold ``T[s, a, s']`` with rows indexed by one mode (1-based).

    Mode 3 puts the next state on the rows and ``(s, a)`` on the columns.
    """
    T = np.asarray(T)
    axis = mode - 1
    if axis not in (0, 1, 2):
        raise ValueError("mode must be 1, 2 or 3")
    return np.moveaxis(T, axis, 0).reshape(T.shape[axis], -1)


def coverage_bound(mdp: TabularMDP, pi: PolicyMatrix, pi_alt: PolicyMatrix, mode: int = 3) -> float:
    """Bound on ``||rho_pi - rho_alt||_1``: ``||Z||_Sinf ||Pi - Pi_alt||_S1 ||T_(mode)||_S2``."""
    P = expected_transition(mdp, pi)
    P_alt = expected_transition(mdp, pi_alt)
    if not is_irreducible(P) or not is_irreducible(P_alt):
        raise ValueError("coverage bound requires irreducible induced chains")
    rho = stationary_distribution(P)
    Z = fundamental_matrix(P, rho)
    return (
        schatten_norm(Z, np.inf)
        * schatten_norm(pi.Pi - pi_alt.Pi, 1)
        * schatten_norm(matricize(mdp.T, mode), 2)
    )


GAP_TOL = 1e-12


def coverage_gap(mdp: TabularMDP, pi: PolicyMatrix, pi_alt: PolicyMatrix) -> float:
    """Measured ``||rho_pi - rho_alt||_1``."""
    rho = stationary_distribution(expected_transition(mdp, pi))
    rho_alt = stationary_distribution(expected_transition(mdp, pi_alt))
    return float(np.abs(rho - rho_alt).sum())


@dataclass(frozen=True)
class PolicyValues:
    V: np.ndarray
    Q: np.ndarray
    eta: float
    eps_bar: float


def policy_evaluation(mdp: TabularMDP, pi: PolicyMatrix) -> PolicyValues:
    """Exact ``V``, ``Q``, ``eta = beta^T V`` and ``max |Q - V|`` by a linear solve."""
    P = expected_transition(mdp, pi)
    r_pi = np.einsum("as,sa->s", pi.Pi, mdp.R)
    n = mdp.n_states
    V = np.linalg.solve(np.eye(n) - mdp.gamma * P, r_pi)
    # one refinement step keeps the Bellman residual at roundoff level
    V += np.linalg.solve(np.eye(n) - mdp.gamma * P, r_pi + mdp.gamma * P @ V - V)
    Q = mdp.R + mdp.gamma * np.einsum("sat,t->sa", mdp.T, V)
    eps_bar = float(np.abs(Q - V[:, None]).max())
    return PolicyValues(V, Q, float(mdp.beta @ V), eps_bar)


def bellman_residual(mdp: TabularMDP, pi: PolicyMatrix, values: PolicyValues) -> float:
    P = expected_transition(mdp, pi)
    r_pi = np.einsum("as,sa->s", pi.Pi, mdp.R)
    return float(np.abs(r_pi + mdp.gamma * P @ values.V - values.V).max())


def make_chain_mdp(N: int, alpha: float, gamma: float = 0.9) -> tuple:
    """Deterministic chain of ``N`` states with a fixed right-biased policy.

    Action 0 moves left, action 1 moves right; the end states keep the agent
    in place when it tries to leave.  The policy moves right with
    probability ``alpha``.  Reward 1 is paid in the rightmost state.
    """
    if N < 2:
        raise ValueError("chain needs at least two states")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    T = np.zeros((N, 2, N))
    for s in range(N):
        T[s, 0, max(s - 1, 0)] = 1.0
        T[s, 1, min(s + 1, N - 1)] = 1.0
    R = np.zeros((N, 2))
    R[N - 1, :] = 1.0
    Pi = np.vstack([np.full(N, 1 - alpha), np.full(N, alpha)])
    return TabularMDP(T, R, gamma), PolicyMatrix(Pi)


def random_mdp(n_states: int, n_actions: int, rng: np.random.Generator, gamma: float = 0.9,
               concentration: float = 1.0) -> TabularMDP:
    """Dense random MDP: Dirichlet transitions, uniform rewards in ``[0, 1]``."""
    T = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    T /= T.sum(axis=2, keepdims=True)
    R = rng.uniform(0, 1, size=(n_states, n_actions))
    return TabularMDP(T, R, gamma)


def random_policy(n_states: int, n_actions: int, rng: np.random.Generator,
                  concentration: float = 1.0) -> PolicyMatrix:
    Pi = rng.dirichlet(np.full(n_actions, concentration), size=n_states).T
    Pi /= Pi.sum(axis=0, keepdims=True)
    return PolicyMatrix(Pi)


def sample_trajectories(mdp: TabularMDP, pi: PolicyMatrix, n_traj: int, horizon: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Visit counts ``N(s, a)`` from ``n_traj`` episodes started from ``beta``."""
    counts = np.zeros((mdp.n_states, mdp.n_actions), dtype=np.int64)
    cum_T = np.cumsum(mdp.T, axis=2)
    cum_Pi = np.cumsum(pi.Pi, axis=0)
    cum_beta = np.cumsum(mdp.beta)
    for _ in range(n_traj):
        s = min(int(np.searchsorted(cum_beta, rng.random(), side="right")), mdp.n_states - 1)
        for _ in range(horizon):
            a = min(int(np.searchsorted(cum_Pi[:, s], rng.random(), side="right")), mdp.n_actions - 1)
            counts[s, a] += 1
            s = min(int(np.searchsorted(cum_T[s, a], rng.random(), side="right")), mdp.n_states - 1)
    return counts


def monte_carlo_return(mdp: TabularMDP, pi: PolicyMatrix, n_traj: int, horizon: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Discounted returns of ``n_traj`` simulated episodes (truncated at ``horizon``)."""
    cum_T = np.cumsum(mdp.T, axis=2)
    cum_Pi = np.cumsum(pi.Pi, axis=0)
    cum_beta = np.cumsum(mdp.beta)
    out = np.empty(n_traj)
    for i in range(n_traj):
        s = min(int(np.searchsorted(cum_beta, rng.random(), side="right")), mdp.n_states - 1)
        total, disc = 0.0, 1.0
        for _ in range(horizon):
            a = min(int(np.searchsorted(cum_Pi[:, s], rng.random(), side="right")), mdp.n_actions - 1)
            total += disc * mdp.R[s, a]
            disc *= mdp.gamma
            s = min(int(np.searchsorted(cum_T[s, a], rng.random(), side="right")), mdp.n_states - 1)
        out[i] = total
    return out
