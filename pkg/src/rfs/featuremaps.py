"""Random feature maps and their limiting kernels.

A feature map stacks ``p`` families of ``M`` random features each; row ``i`` of
:func:`apply_features` is ``(Phi^(1)(x_i), ..., Phi^(p)(x_i))`` with every entry
carrying the ``1/sqrt(M)`` prefactor, so that the empirical kernel is a plain
inner product of rows.

Supported kinds:

``gaussian-rff``
    ``sqrt(2) cos(w^T x + b)``, ``w ~ N(0, I / bandwidth^2)``, ``b ~ U[0, 2 pi]``.
``ntk``
    one-hidden-layer neural tangent features, ``p = d + 2`` families built from an
    activation and its derivative.
``model-fourier``
    cosine/sine features of a synthetic Fourier model (see :mod:`rfs.synth`),
    frequency index drawn uniformly from ``{1..J}``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

KINDS = ("gaussian-rff", "ntk", "model-fourier")


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray] | None
    # bounds on |fn| (None if unbounded) and |deriv| used for kappa
    fn_bound: float | None = None
    deriv_bound: float = 1.0


def _logistic(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logistic_deriv(u):
    s = _logistic(u)
    return s * (1.0 - s)


ACTIVATIONS = {
    "sigmoid": Activation("sigmoid", _logistic, _logistic_deriv, fn_bound=1.0, deriv_bound=0.25),
    "tanh": Activation("tanh", np.tanh, lambda u: 1.0 - np.tanh(u) ** 2, fn_bound=1.0, deriv_bound=1.0),
    # relu'(0) := 0, so a zero input yields an all-zero feature row
    "relu": Activation("relu", lambda u: np.maximum(u, 0.0), lambda u: (u > 0).astype(float), None, 1.0),
}

DEFAULT_SCALES = {
    "gaussian-rff": {"bandwidth": 1.0},
    "ntk": {"tau": 1.0, "gamma": 1.0, "input_radius": 1.0},
    "model-fourier": {},
}


def get_activation(activation: str | Activation) -> Activation:
    if isinstance(activation, Activation):
        if activation.deriv is None:
            raise ValueError(f"activation {activation.name!r} has no derivative; NTK features need sigma'")
        return activation
    try:
        return ACTIVATIONS[activation]
    except KeyError:
        raise ValueError(f"unknown activation {activation!r}; choose from {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Sampled random feature map ``x -> Phi_M(x)`` in ``R^{p M}``.

    ``params`` holds the drawn parameters: ``omega`` (M x d) and ``offset`` (M,)
    for gaussian-rff, ``omega`` (M x d) for ntk, ``freq`` (M,) and ``eig`` (J,)
    for model-fourier. ``kappa_sq`` bounds ``sum_i |phi^(i)(x, omega_m)|^2`` for
    every sampled ``omega_m`` and every ``x`` in the declared input domain
    (``input_radius`` ball for ntk, everything otherwise).
    """

    kind: str
    family_count: int
    feature_count: int
    input_dim: int
    params: dict = field(repr=False)
    scales: dict
    kappa_sq: float
    seed: int
    activation: Activation | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.family_count * self.feature_count

    @property
    def fingerprint(self) -> str:
        """Stable identity of the map (kind, sizes, constants, seed, drawn parameters)."""
        h = hashlib.blake2b(digest_size=12)
        h.update(repr((self.kind, self.family_count, self.feature_count, self.input_dim,
                       sorted(self.scales.items()), self.seed,
                       self.activation.name if self.activation else None)).encode())
        for key in sorted(self.params):
            h.update(np.ascontiguousarray(self.params[key]).tobytes())
        return h.hexdigest()

    def __call__(self, X):
        return apply_features(self, X)


def _check_positive_int(name, value):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def sample_feature_map(kind: str, d: int, M: int, scale_constants: dict | None = None,
                       seed: int = 0, activation: str | Activation = "sigmoid",
                       eig=None) -> FeatureMap:
    """Draw ``M`` random parameters for a feature map of the given kind.

    ``eig`` is the eigenvalue sequence of the Fourier model and is required for
    ``kind="model-fourier"`` (``d`` must be 1 there). Identical arguments give
    bit-identical parameters.
    """
    d = _check_positive_int("d", d)
    M = _check_positive_int("M", M)
    if kind not in KINDS:
        raise ValueError(f"unknown feature kind {kind!r}; choose from {KINDS}")
    scales = dict(DEFAULT_SCALES[kind])
    scales.update(scale_constants or {})
    for key, val in scales.items():
        if not (np.isfinite(val) and val > 0):
            raise ValueError(f"scale constant {key} must be strictly positive, got {val!r}")
    rng = np.random.default_rng(seed)

    if kind == "gaussian-rff":
        omega = rng.standard_normal((M, d)) / scales["bandwidth"]
        offset = rng.uniform(0.0, 2.0 * np.pi, size=M)
        return FeatureMap(kind, 1, M, d, {"omega": omega, "offset": offset}, scales, 2.0, seed)

    if kind == "ntk":
        act = get_activation(activation)
        omega = rng.standard_normal((M, d))
        tau, gamma, radius = scales["tau"], scales["gamma"], scales["input_radius"]
        deriv_part = tau**2 * (radius**2 + gamma**2) * act.deriv_bound**2
        if act.fn_bound is None:
            # |sigma(u)| <= |u| for relu; bounded only over the sampled omegas
            fn_part = float(np.max(np.sum(omega**2, axis=1))) * radius**2
        else:
            fn_part = act.fn_bound**2
        return FeatureMap(kind, d + 2, M, d, {"omega": omega}, scales, deriv_part + fn_part, seed, act)

    # model-fourier
    if d != 1:
        raise ValueError("model-fourier features act on scalar inputs (d = 1)")
    if eig is None:
        raise ValueError("model-fourier features need the model eigenvalues")
    eig = np.asarray(eig, dtype=float)
    if eig.ndim != 1 or eig.size == 0 or np.any(eig <= 0):
        raise ValueError("model eigenvalues must be a nonempty positive vector")
    J = eig.size
    freq = rng.integers(1, J + 1, size=M)
    return FeatureMap(kind, 2, M, 1, {"freq": freq, "eig": eig}, scales,
                      float(2 * J * eig.max()), seed)


def _as_inputs(fmap: FeatureMap, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if fmap.input_dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != fmap.input_dim:
        raise ValueError(f"inputs have shape {X.shape}, map expects {fmap.input_dim} columns")
    return X


def apply_features(fmap: FeatureMap, X) -> np.ndarray:
    """Feature matrix of shape ``(n, p M)``; ``K_M(x, x') = <row(x), row(x')>``."""
    X = _as_inputs(fmap, X)
    M = fmap.feature_count
    scale = 1.0 / np.sqrt(M)
    if fmap.kind == "gaussian-rff":
        proj = X @ fmap.params["omega"].T + fmap.params["offset"]
        return (np.sqrt(2.0) * scale) * np.cos(proj)

    if fmap.kind == "ntk":
        act = fmap.activation
        tau, gamma = fmap.scales["tau"], fmap.scales["gamma"]
        proj = X @ fmap.params["omega"].T
        dact = act.deriv(proj) * scale
        n, d = X.shape
        out = np.empty((n, (d + 2) * M))
        for i in range(d):
            out[:, i * M:(i + 1) * M] = tau * X[:, i:i + 1] * dact
        out[:, d * M:(d + 1) * M] = act.fn(proj) * scale
        out[:, (d + 1) * M:] = (tau * gamma) * dact
        return out

    freq = fmap.params["freq"]
    eig = fmap.params["eig"]
    amp = np.sqrt(2.0 * eig.size * eig[freq - 1]) * scale
    arg = X[:, :1] * freq
    return np.hstack([amp * np.cos(arg), amp * np.sin(arg)])


def rf_kernel(fmap: FeatureMap, x, x_prime) -> float:
    """Empirical kernel ``K_M(x, x')``."""
    rows = apply_features(fmap, np.vstack([_as_inputs(fmap, x), _as_inputs(fmap, x_prime)]))
    if rows.shape[0] != 2:
        raise ValueError("rf_kernel takes single points")
    return float(rows[0] @ rows[1])


def rf_gram(fmap: FeatureMap, X, Y=None) -> np.ndarray:
    """Matrix of ``K_M`` values between rows of ``X`` and ``Y``."""
    FX = apply_features(fmap, X)
    FY = FX if Y is None else apply_features(fmap, Y)
    return FX @ FY.T


def rf_kernel_terms(fmap: FeatureMap, x, x_prime) -> np.ndarray:
    """Per-feature terms ``k_m = sum_i phi^(i)(x, w_m) phi^(i)(x', w_m)``.

    ``K_M`` is their mean; their spread gives the Monte-Carlo standard error.
    """
    rows = apply_features(fmap, np.vstack([_as_inputs(fmap, x), _as_inputs(fmap, x_prime)]))
    M = fmap.feature_count
    prod = (rows[0] * rows[1]).reshape(fmap.family_count, M).sum(axis=0)
    return prod * M


# --- limiting kernels -------------------------------------------------------

ORACLE_KINDS = ("gaussian-closed-form", "relu-ntk-closed-form", "model-fourier-closed-form")


@dataclass(frozen=True)
class KernelOracle:
    """Closed-form ``K_infinity`` matching a feature map kind."""

    kind: str
    params: dict

    @classmethod
    def for_map(cls, fmap: FeatureMap) -> "KernelOracle":
        if fmap.kind == "gaussian-rff":
            return cls("gaussian-closed-form", {"bandwidth": fmap.scales["bandwidth"]})
        if fmap.kind == "ntk":
            if fmap.activation.name != "relu":
                raise ValueError("closed-form NTK oracle exists only for the relu activation")
            return cls("relu-ntk-closed-form", {"tau": fmap.scales["tau"], "gamma": fmap.scales["gamma"]})
        return cls("model-fourier-closed-form", {"eig": fmap.params["eig"]})


def _relu_moments(x, y):
    """``E[relu(w.x) relu(w.y)]`` and ``E[relu'(w.x) relu'(w.y)]`` for ``w ~ N(0, I)``."""
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 0.0, 0.0
    cos = np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0)
    theta = np.arccos(cos)
    first = nx * ny * (np.sin(theta) + (np.pi - theta) * cos) / (2.0 * np.pi)
    second = (np.pi - theta) / (2.0 * np.pi)
    return float(first), float(second)


def limit_kernel(oracle: KernelOracle, x, x_prime) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != y.shape:
        raise ValueError("points must have equal dimension")
    if oracle.kind == "gaussian-closed-form":
        s = oracle.params["bandwidth"]
        return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * s * s)))
    if oracle.kind == "relu-ntk-closed-form":
        tau, gamma = oracle.params["tau"], oracle.params["gamma"]
        first, second = _relu_moments(x, y)
        return first + tau**2 * (float(np.dot(x, y)) + gamma**2) * second
    if oracle.kind == "model-fourier-closed-form":
        eig = np.asarray(oracle.params["eig"])
        j = np.arange(1, eig.size + 1)
        return float(np.sum(2.0 * eig * np.cos(j * (x[0] - y[0]))))
    raise ValueError(f"unsupported oracle kind {oracle.kind!r}")
