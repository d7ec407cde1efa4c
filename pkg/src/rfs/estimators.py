"""Random-feature estimators and a kernel-space spectral oracle.

Feature-space fits return an :class:`EstimatorState` holding ``theta`` so that
``f(x) = Phi_M(x)^T theta``. The oracle :func:`fit_kernel_oracle` applies any
filter to the eigendecomposition of ``K / n`` and returns dual coefficients;
for ``K = K_M`` both routes describe the same estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .featuremaps import FeatureMap, apply_features
from .filters import FilterSpec, filter_value, step_coefficients

ORACLE_CAP = 2000
NEG_EIG_TOL = 1e-6


class DivergenceError(RuntimeError):
    pass


@dataclass
class EstimatorState:
    theta: np.ndarray
    theta_prev: np.ndarray
    iteration: int
    filter: FilterSpec
    map_ref: str | None = None
    history: list = field(default_factory=list, repr=False)


def _check_xy(Phi, y):
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if Phi.ndim != 2 or Phi.shape[0] != y.size:
        raise ValueError(f"feature matrix {Phi.shape} does not match {y.size} targets")
    if y.size < 1:
        raise ValueError("need at least one sample")
    if not (np.all(np.isfinite(Phi)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite inputs")
    return Phi, y


def fit_rf_krr(Phi, y, lam: float, map_ref: str | None = None) -> EstimatorState:
    """Minimizer of ``(1/n) |Phi theta - y|^2 + lam |theta|^2``.

    Solves the ``D x D`` normal equations, or the ``n x n`` dual system when
    ``n < D``; both are the same estimator.
    """
    Phi, y = _check_xy(Phi, y)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lambda must be positive")
    n, D = Phi.shape
    if D <= n:
        A = Phi.T @ Phi / n
        A[np.diag_indices_from(A)] += lam
        theta = scipy.linalg.solve(A, Phi.T @ y / n, assume_a="pos")
    else:
        G = Phi @ Phi.T
        G[np.diag_indices_from(G)] += lam * n
        theta = Phi.T @ scipy.linalg.solve(G, y, assume_a="pos")
    spec = FilterSpec("tikhonov", lam=lam)
    return EstimatorState(theta, np.zeros_like(theta), 0, spec, map_ref)


def iterate_rf(Phi, y, spec: FilterSpec, theta0=None):
    """Yield ``(s, theta_s)`` of the parameter-space iteration for ``s = 1..spec.k``.

    ``theta_s = theta_{s-1} - a_s grad + mu_s (theta_{s-1} - theta_{s-2})`` with
    ``grad = Phi^T (Phi theta - y) / n``; Nesterov takes the gradient at the
    extrapolated point. Starts from ``theta_0 = theta_{-1} = 0``.
    """
    Phi, y = _check_xy(Phi, y)
    if spec.method == "tikhonov":
        raise ValueError("tikhonov is not iterative; use fit_rf_krr")
    n, D = Phi.shape
    b = Phi.T @ y / n
    theta_prev = np.zeros(D) if theta0 is None else np.array(theta0, dtype=float)
    theta = theta_prev.copy()
    limit = 1e6 * max(np.linalg.norm(y), 1e-300) / math.sqrt(n * spec.lam)
    nesterov = spec.method == "nesterov"
    for s in range(1, spec.k + 1):
        mu, a = step_coefficients(spec, s)
        if nesterov:
            g = theta + mu * (theta - theta_prev)
            new = g - a * (Phi.T @ (Phi @ g) / n - b)
        else:
            new = theta - a * (Phi.T @ (Phi @ theta) / n - b)
            if mu:
                new += mu * (theta - theta_prev)
        theta_prev, theta = theta, new
        norm = np.linalg.norm(theta)
        if not np.isfinite(norm) or norm > limit:
            raise DivergenceError(f"iteration {s}: |theta| = {norm:.3g} exceeds guard {limit:.3g}")
        yield s, theta, theta_prev


def fit_rf_iterative(Phi, y, spec: FilterSpec, map_ref: str | None = None,
                     record: bool = False) -> EstimatorState:
    """Run exactly ``spec.k`` iterations; ``record`` keeps every iterate in ``history``."""
    history = []
    theta = theta_prev = None
    for _, theta, theta_prev in iterate_rf(Phi, y, spec):
        if record:
            history.append(theta.copy())
    return EstimatorState(theta, theta_prev, spec.k, spec, map_ref, history)


def fit_rf(Phi, y, spec: FilterSpec, map_ref: str | None = None) -> EstimatorState:
    if spec.method == "tikhonov":
        return fit_rf_krr(Phi, y, spec.lam, map_ref)
    return fit_rf_iterative(Phi, y, spec, map_ref)


# --- kernel-space oracle -------------------------------------------------------

@dataclass
class SpectralDecomposition:
    """Eigenpairs of ``K / n`` with eigenvalues sorted nonincreasing and clamped at 0."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n: int

    @classmethod
    def of_gram(cls, K, tol: float = NEG_EIG_TOL) -> "SpectralDecomposition":
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.allclose(K, K.T, atol=1e-8 * max(1.0, np.abs(K).max())):
            raise ValueError("Gram matrix is not symmetric")
        n = K.shape[0]
        try:
            w, V = np.linalg.eigh((K + K.T) / (2.0 * n))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigendecomposition failed: {exc}") from exc
        trace = max(float(np.trace(K)) / n, 0.0)
        if w.size and w[0] < -tol * max(trace, 1e-300):
            raise ValueError(f"Gram matrix has eigenvalue {w[0]:.3g} below -{tol:g} * trace")
        w = np.clip(w, 0.0, None)
        return cls(w[::-1].copy(), V[:, ::-1].copy(), n)

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def fit_kernel_oracle(K, y, spec: FilterSpec, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dual coefficients ``alpha = (1/n) phi(K/n) y`` so that ``f(x) = sum_i alpha_i K(x_i, x)``."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"Gram matrix {K.shape} does not match {n} targets")
    if n > cap:
        raise ValueError(f"n = {n} exceeds the oracle cap {cap}")
    dec = SpectralDecomposition.of_gram(K)
    phi = filter_value(spec, dec.eigenvalues, allow_zero=True)
    V = dec.eigenvectors
    return V @ (phi * (V.T @ y)) / n


def predict(fmap: FeatureMap, state: EstimatorState, X) -> np.ndarray:
    if state.map_ref is not None and state.map_ref != fmap.fingerprint:
        raise ValueError("estimator state was fitted with a different feature map")
    F = apply_features(fmap, X)
    if F.shape[1] != state.theta.size:
        raise ValueError(f"feature dimension {F.shape[1]} does not match theta of size {state.theta.size}")
    return F @ state.theta


# --- text snapshots --------------------------------------------------------------

def save_state(state: EstimatorState, path) -> None:
    """One value per line after a two-line header with dims and filter settings."""
    f = state.filter
    header = {
        "dim": state.theta.size, "iteration": state.iteration, "method": f.method,
        "lambda": repr(f.lam), "alpha": repr(f.alpha), "beta": repr(f.beta),
        "k": f.k if f.k is not None else "", "schedule": f.schedule, "nu": repr(f.nu),
        "t_max": repr(f.t_max), "map": state.map_ref or "",
    }
    with open(path, "w") as fh:
        fh.write("rfs-state 1\n")
        fh.write(" ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for v in state.theta:
            fh.write(repr(float(v)) + "\n")
        for v in state.theta_prev:
            fh.write(repr(float(v)) + "\n")


def load_state(path) -> EstimatorState:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "rfs-state 1":
        raise ValueError(f"{path}: not an estimator state file")
    meta = dict(item.split("=", 1) for item in lines[1].split())
    D = int(meta["dim"])
    values = np.array([float(v) for v in lines[2:]])
    if values.size != 2 * D:
        raise ValueError(f"{path}: expected {2 * D} values, found {values.size}")
    if meta["method"] == "tikhonov":
        spec = FilterSpec("tikhonov", lam=float(meta["lambda"]), t_max=float(meta["t_max"]))
    else:
        spec = FilterSpec(meta["method"], alpha=float(meta["alpha"]), beta=float(meta["beta"]),
                          k=int(meta["k"]), schedule=meta["schedule"], nu=float(meta["nu"]),
                          t_max=float(meta["t_max"]))
    return EstimatorState(values[:D], values[D:], int(meta["iteration"]), spec, meta["map"] or None)
