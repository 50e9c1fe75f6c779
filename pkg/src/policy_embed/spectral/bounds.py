"""Closed-form error bounds for policies represented by basis coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RkhsSpectrum:
    """Kernel eigenvalues with the coefficients of two policies in that eigenbasis."""

    eigenvalues: np.ndarray
    xi_1: np.ndarray
    xi_2: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        x1 = np.asarray(self.xi_1, dtype=float).ravel()
        x2 = np.asarray(self.xi_2, dtype=float).ravel()
        if not (lam.size == x1.size == x2.size):
            raise ValueError("eigenvalues and coefficient sequences must have equal length")
        if np.any(lam <= 0):
            raise ValueError("kernel eigenvalues must be positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("kernel eigenvalues must be nonincreasing")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "xi_1", x1)
        object.__setattr__(self, "xi_2", x2)

    @property
    def weighted_gaps(self) -> np.ndarray:
        """Terms ``(xi_1 - xi_2)^2 / lambda``."""
        return (self.xi_1 - self.xi_2) ** 2 / self.eigenvalues


def rkhs_distance_sq(spectrum: RkhsSpectrum) -> float:
    """Squared RKHS distance ``sum_k (xi1_k - xi2_k)^2 / lambda_k``."""
    return float(spectrum.weighted_gaps.sum())


def tail_bound(epsilon: float, K: int) -> float:
    """``epsilon^(2(K+1)) / (1 - epsilon^2)``: geometric tail beyond index K."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    return epsilon ** (2 * (K + 1)) / (1 - epsilon**2)


def geometric_rate(gaps, eigenvalues, K: int) -> float:
    """Smallest ``epsilon`` with ``|gap_k| <= epsilon^k sqrt(lambda_k)`` for ``k > K``.

    Indices are 1-based as in the coefficient ordering.  Returns ``nan`` when
    no tail exists.
    """
    gaps = np.abs(np.asarray(gaps, dtype=float))
    lam = np.asarray(eigenvalues, dtype=float)
    k = np.arange(1, gaps.size + 1)
    tail = k > K
    if not np.any(tail):
        return float("nan")
    ratio = gaps[tail] / np.sqrt(lam[tail])
    return float(np.max(ratio ** (1.0 / k[tail])))


def truncation_return_bound(
    delta_K: float,
    M_max: float,
    eps_bar: float,
    eps_bar_max: float,
    gamma: float,
    n_actions: int,
    epsilon: float,
    K: int,
) -> float:
    """Return-gap bound between a policy and its K-term truncation.

    The big-O tail term is instantiated as
    ``2 E_K (M_max delta_K) + E_K^2 M_max^2`` with ``E_K = tail_bound(epsilon, K)``.
    """
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if delta_K < 0 or M_max <= 0 or eps_bar < 0 or eps_bar_max < 0:
        raise ValueError("delta_K, eps_bar, eps_bar_max must be >= 0 and M_max > 0")
    E_K = tail_bound(epsilon, K)
    md = M_max * delta_K
    inner = md**2 + 2 * E_K * md + E_K**2 * M_max**2
    return 4 * n_actions**2 * eps_bar * gamma / (1 - gamma) ** 2 * inner + eps_bar_max


def bandit_return_bound(coeff_gaps, M: float, reward_p_norm: float, n_actions: int, q: float,
                        squared: bool = True) -> float:
    """Bandit return-gap bound ``|A|^(1/q) M ||r||_p sum_k gap_k``.

    ``coeff_gaps`` are the terms ``(xi1_k - xi2_k)^2 / lambda_k``.  With
    ``squared=False`` the sum is replaced by its square root, i.e. the RKHS
    norm rather than its square.
    """
    if q <= 1:
        raise ValueError(f"q must exceed 1, got {q}")
    if M <= 0 or reward_p_norm < 0:
        raise ValueError("M must be positive and the reward norm nonnegative")
    total = float(np.sum(coeff_gaps))
    if not squared:
        total = math.sqrt(total)
    return n_actions ** (1.0 / q) * M * reward_p_norm * total
