"""Effective dimension, spectral decay fits and the lambda(n), M(n) schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filters import LAMBDA_POWER


def effective_dimension(eigs, lam: float) -> float:
    """``N(lam) = sum_i mu_i / (mu_i + lam)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    mu = np.asarray(eigs, dtype=float)
    if np.any(mu < 0):
        raise ValueError("eigenvalues must be nonnegative")
    return float(np.sum(mu / (mu + lam)))


def fit_spectral_decay(eigs, window: tuple[int, int] | None = None) -> float:
    """Capacity exponent ``b = -1/s`` from the log-log slope ``s`` of sorted eigenvalues.

    ``window`` is an inclusive 1-based index range, default ``[5, n // 4]``.
    """
    mu = np.sort(np.asarray(eigs, dtype=float))[::-1]
    lo, hi = window if window is not None else (5, mu.size // 4)
    lo, hi = max(int(lo), 1), min(int(hi), mu.size)
    if hi - lo + 1 < 10:
        raise ValueError(f"decay window [{lo}, {hi}] holds fewer than 10 eigenvalues")
    seg = mu[lo - 1:hi]
    if np.any(seg <= 0):
        raise ValueError("nonpositive eigenvalue inside the decay window")
    idx = np.arange(lo, hi + 1, dtype=float)
    slope = np.polyfit(np.log(idx), np.log(seg), 1)[0]
    if slope >= 0:
        raise ValueError(f"eigenvalues do not decay (slope {slope:.3g})")
    return float(-1.0 / slope)


@dataclass(frozen=True)
class TheoryParams:
    r: float
    b: float
    R: float = 1.0
    c_b: float = 1.0
    C_lambda: float = 1.0
    C_M: float = 1.0
    delta: float = 0.05

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("source exponent r must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("capacity exponent b must lie in [0, 1]")
        if not 2 * self.r + self.b > 1:
            raise ValueError(f"2r + b = {2 * self.r + self.b:g} <= 1: hard learning regime is not supported")
        for name in ("R", "c_b", "C_lambda", "C_M"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def n0(self) -> float:
        s = 2 * self.r + self.b
        return math.exp(s / (s - 1.0))

    @property
    def lambda_exponent(self) -> float:
        return 1.0 / (2 * self.r + self.b)

    @property
    def feature_exponent(self) -> float:
        r, b = self.r, self.b
        s = 2 * r + b
        if r < 0.5:
            return 1.0 / s
        if r <= 1.0:
            return (1.0 + b * (2 * r - 1.0)) / s
        return 2.0 * r / s

    @property
    def rate_exponent(self) -> float:
        """Exponent of ``n`` in the L2 error bound (squared error has twice this)."""
        return -self.r / (2 * self.r + self.b)


def theory_schedule(n: int, params: TheoryParams, method: str = "landweber") -> tuple[float, int, int]:
    """``(lambda_n, M_n, k_n)`` for ``n`` samples.

    ``lambda_n = C_lambda n^{-1/(2r+b)}``, ``M_n = ceil(C_M log(n) n^e)`` with the
    regime-dependent exponent ``e``, and ``k_n`` the iteration count for which
    the method's level ``1/k`` (or ``1/k^2``) reaches ``lambda_n``.
    """
    if n < params.n0:
        raise ValueError(f"n = {n} is below n0 = {params.n0:.4g} required by the schedule")
    lam = params.C_lambda * n ** (-params.lambda_exponent)
    M = math.ceil(params.C_M * math.log(n) * n ** params.feature_exponent)
    k = math.ceil(lam ** (-1.0 / LAMBDA_POWER[method]) - 1e-9)
    return lam, max(M, 1), max(k, 1)
