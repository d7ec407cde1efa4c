"""Synthetic regression problems with a known kernel spectrum and source regularity.

Inputs are uniform on ``[0, 2 pi)``. The limit kernel is
``K(x, x') = sum_j 2 eig_j cos(j (x - x'))`` whose integral operator has the
orthonormal eigenfunctions ``sqrt(2) cos(j x)``, ``sqrt(2) sin(j x)`` with
eigenvalue ``eig_j = j^{-1/b}`` (``eig_1 = 1``). The regression function is
``g = L^r h`` for ``h`` with Fourier coefficients ``(c_j, s_j)`` and ``|h| = R``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .featuremaps import FeatureMap, sample_feature_map
from .ingest import Dataset


@dataclass(frozen=True, eq=False)
class SyntheticModel:
    J: int
    b: float
    r: float
    R: float
    noise_sigma: float
    eig: np.ndarray
    c: np.ndarray
    s: np.ndarray
    seed: int

    @property
    def target_coefficients(self) -> np.ndarray:
        """Coefficients of ``g`` in the basis ``(sqrt2 cos jx)_j, (sqrt2 sin jx)_j``."""
        w = self.eig**self.r
        return np.concatenate([w * self.c, w * self.s])

    @property
    def target_norm(self) -> float:
        return float(np.linalg.norm(self.target_coefficients))

    def limit_kernel_diag(self) -> float:
        return float(2.0 * self.eig.sum())

    def effective_dimension(self, lam: float) -> float:
        """Analytic ``tr(L (L + lam)^{-1})``; each eigenvalue has multiplicity two."""
        return float(np.sum(2.0 * self.eig / (self.eig + lam)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "eig_j", "c_j", "s_j"])
            for j in range(self.J):
                w.writerow([j + 1, repr(float(self.eig[j])), repr(float(self.c[j])), repr(float(self.s[j]))])


def build_model(J: int, b: float, r: float, R: float = 1.0, noise_sigma: float = 0.0,
                seed: int = 0, coef_decay: float = 0.5, coeffs=None) -> SyntheticModel:
    """Draw ``h`` and fix the spectrum.

    Coefficients are i.i.d. normal times ``j^{-coef_decay}``, rescaled so that
    ``sum_j c_j^2 + s_j^2 = R^2``. With ``coef_decay = 1/2`` the squared bias of
    a filter at level ``lam`` scales like ``lam^{2r}``, so measured learning
    curves follow the nominal rate; ``coef_decay = 0`` gives flat coefficients.
    ``coeffs=(c, s)`` bypasses the draw (no rescaling).
    """
    if int(J) != J or J < 1:
        raise ValueError("J must be a positive integer")
    if not 0 < b <= 1:
        raise ValueError("b must lie in (0, 1]")
    if not r > 0 or not R > 0:
        raise ValueError("r and R must be positive")
    if not 2 * r + b > 1:
        raise ValueError(f"2r + b = {2 * r + b:g} <= 1: hard learning regime is out of scope")
    if not noise_sigma >= 0:
        raise ValueError("noise_sigma must be nonnegative")
    J = int(J)
    j = np.arange(1, J + 1, dtype=float)
    eig = j ** (-1.0 / b)
    if coeffs is not None:
        c, s = (np.asarray(v, dtype=float).copy() for v in coeffs)
        if c.shape != (J,) or s.shape != (J,):
            raise ValueError("explicit coefficients must have length J")
    else:
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(J) * j**-coef_decay
        s = rng.standard_normal(J) * j**-coef_decay
        scale = R / math.sqrt(float(np.sum(c**2 + s**2)))
        c, s = c * scale, s * scale
    return SyntheticModel(J, float(b), float(r), float(R), float(noise_sigma), eig, c, s, int(seed))


def _basis(model: SyntheticModel, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    arg = np.outer(x, np.arange(1, model.J + 1))
    return math.sqrt(2.0) * np.cos(arg), math.sqrt(2.0) * np.sin(arg)


def true_target(model: SyntheticModel, x) -> np.ndarray:
    cos, sin = _basis(model, x)
    w = model.eig**model.r
    return cos @ (w * model.c) + sin @ (w * model.s)


def sample_synthetic(model: SyntheticModel, n: int, seed: int) -> Dataset:
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 2.0 * np.pi, size=int(n))
    y = true_target(model, x)
    if model.noise_sigma > 0:
        y = y + model.noise_sigma * rng.standard_normal(int(n))
    return Dataset(x.reshape(-1, 1), y, source=f"synthetic(J={model.J},b={model.b},r={model.r},seed={model.seed})",
                   meta={"model": model})


def analytic_l2_error(model: SyntheticModel, coeffs) -> float:
    """``|g - f|_{L2}`` for an estimate with basis coefficients ``coeffs`` (length ``2J``)."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size != 2 * model.J:
        raise ValueError(f"expected {2 * model.J} coefficients, got {coeffs.size}")
    return float(np.linalg.norm(model.target_coefficients - coeffs))


def model_features(model: SyntheticModel, M: int, seed: int) -> FeatureMap:
    """Random features of the model kernel: frequency drawn uniformly from ``{1..J}``."""
    return sample_feature_map("model-fourier", 1, M, seed=seed, eig=model.eig)


def fourier_coefficients(fmap: FeatureMap, theta) -> np.ndarray:
    """Basis coefficients of ``x -> Phi_M(x)^T theta`` for a model-fourier map."""
    if fmap.kind != "model-fourier":
        raise ValueError("only model-fourier estimates have an exact Fourier expansion")
    theta = np.asarray(theta, dtype=float)
    M = fmap.feature_count
    freq = fmap.params["freq"]
    eig = fmap.params["eig"]
    J = eig.size
    # feature amplitude sqrt(2 J eig_j / M); basis function carries sqrt(2)
    w = np.sqrt(J * eig[freq - 1] / M)
    c = np.bincount(freq - 1, weights=w * theta[:M], minlength=J)
    s = np.bincount(freq - 1, weights=w * theta[M:], minlength=J)
    return np.concatenate([c, s])
