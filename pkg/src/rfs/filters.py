"""Spectral filter functions ``phi_lambda`` and residuals ``r_lambda = 1 - t phi_lambda``.

Iterative methods are all two-step linear recurrences

    theta_s = theta_{s-1} + mu_s (theta_{s-1} - theta_{s-2}) - a_s grad(.)

with the gradient taken at ``theta_{s-1}`` (Landweber, heavy-ball) or at the
extrapolated point (Nesterov). :func:`step_coefficients` yields ``(mu_s, a_s)``
and drives both the scalar filters here and the parameter-space iterations in
:mod:`rfs.estimators`, so the two cannot drift apart.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

METHODS = ("tikhonov", "landweber", "heavy-ball", "nesterov")
# lambda = 1 / k ** LAMBDA_POWER[method] for iterative methods
LAMBDA_POWER = {"tikhonov": 1, "landweber": 1, "heavy-ball": 2, "nesterov": 2}


@dataclass(frozen=True)
class FilterSpec:
    """A member of a spectral filter family.

    For iterative methods ``k`` is the iteration count and ``lam`` is derived
    from it (``1/k`` for landweber, ``1/k^2`` for heavy-ball and nesterov).
    Heavy-ball uses a constant momentum ``beta`` (``schedule="constant"``) or
    the nu-method coefficients (``schedule="nu"``), which give qualification
    ``nu`` at ``lambda = 1/k^2``.
    """

    method: str
    lam: float | None = None
    alpha: float = 1.0
    beta: float = 0.0
    k: int | None = None
    schedule: str = "constant"
    nu: float = 2.0
    t_max: float = 1.0
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown filter method {self.method!r}; choose from {METHODS}")
        if self.method == "tikhonov":
            if self.lam is None or not self.lam > 0:
                raise ValueError("tikhonov needs lambda > 0")
            object.__setattr__(self, "k", None)
        else:
            if self.k is None:
                if self.lam is None:
                    raise ValueError(f"{self.method} needs an iteration count k or lambda")
                object.__setattr__(self, "k", iterations_for(self.method, self.lam))
            if int(self.k) != self.k or self.k < 1:
                raise ValueError(f"iteration count must be a positive integer, got {self.k!r}")
            object.__setattr__(self, "k", int(self.k))
            object.__setattr__(self, "lam", 1.0 / self.k ** LAMBDA_POWER[self.method])
            if not self.alpha > 0:
                raise ValueError("step size alpha must be positive")
            if self.alpha * self.t_max > 1.0 + 1e-12:
                raise ValueError(f"alpha * t_max = {self.alpha * self.t_max:g} > 1: step size inadmissible")
        if self.method == "heavy-ball":
            if self.schedule not in ("constant", "nu"):
                raise ValueError(f"unknown heavy-ball schedule {self.schedule!r}")
            if not 0.0 <= self.beta < 1.0:
                raise ValueError("momentum beta must lie in [0, 1)")
            if self.schedule == "nu" and not self.nu > 0:
                raise ValueError("nu-method needs nu > 0")
        object.__setattr__(self, "constants", {**declared_constants(self), **self.constants})

    def with_k(self, k: int) -> "FilterSpec":
        return replace(self, k=k, lam=None, constants={})


def iterations_for(method: str, lam: float) -> int:
    """Iteration count matching a regularization level."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return max(1, math.ceil(lam ** (-1.0 / LAMBDA_POWER[method]) - 1e-9))


def declared_constants(spec: FilterSpec) -> dict:
    """Known bounds ``D, E, c0`` and qualification; ``cq`` maps q to ``c_q`` or None."""
    if spec.method == "tikhonov":
        return {"D": 1.0, "E": 1.0, "c0": 1.0, "nu": 1.0, "cq": lambda q: 1.0 if q <= 1 else None}
    if spec.method == "landweber":
        a = spec.alpha
        # sup_t t phi <= 1 for alpha t <= 1 (independent of alpha); E = alpha
        return {"D": 1.0, "E": a, "c0": 1.0, "nu": math.inf,
                "cq": lambda q: (q / a) ** q if q > 0 else 1.0}
    if spec.method == "heavy-ball":
        # qualification nu is known for the nu-method schedule; c_nu is not
        nu = spec.nu if spec.schedule == "nu" else None
        return {"D": 2.0, "E": 2.0, "c0": None, "nu": nu, "cq": lambda q: None}
    return {"D": None, "E": None, "c0": None, "nu": None, "cq": lambda q: None}


def step_coefficients(spec: FilterSpec, s: int) -> tuple[float, float]:
    """Momentum ``mu_s`` and gradient step ``a_s`` of iteration ``s >= 1``."""
    if spec.method == "landweber":
        return 0.0, spec.alpha
    if spec.method == "nesterov":
        return (s - 2) / (s + 1), spec.alpha
    if spec.schedule == "constant":
        return spec.beta, spec.alpha
    nu = spec.nu
    if s == 1:
        return 0.0, spec.alpha * (4 * nu + 2) / (4 * nu + 1)
    mu = (s - 1) * (2 * s - 3) * (2 * s + 2 * nu - 1) / (
        (s + 2 * nu - 1) * (2 * s + 4 * nu - 1) * (2 * s + 2 * nu - 3))
    om = 4 * (2 * s + 2 * nu - 1) * (s + nu - 1) / ((s + 2 * nu - 1) * (2 * s + 4 * nu - 1))
    return mu, spec.alpha * om


def _iterate(spec: FilterSpec, t: np.ndarray, k_max: int):
    """Yield ``(s, phi_s(t), r_s(t))`` for ``s = 1..k_max``.

    ``phi`` runs its own recurrence (finite at ``t = 0``); ``r`` runs the
    residual recurrence, so the identity ``r + t phi = 1`` is a real check.
    """
    nesterov = spec.method == "nesterov"
    phi_prev = np.zeros_like(t)
    phi = np.zeros_like(t)
    r_prev = np.ones_like(t)
    r = np.ones_like(t)
    for s in range(1, k_max + 1):
        mu, a = step_coefficients(spec, s)
        if nesterov:
            psi = phi + mu * (phi - phi_prev)
            phi_new = psi + a * (1.0 - t * psi)
            rho = r + mu * (r - r_prev)
            r_new = (1.0 - a * t) * rho
        else:
            phi_new = phi + mu * (phi - phi_prev) + a * (1.0 - t * phi)
            r_new = r + mu * (r - r_prev) - a * t * r
        phi_prev, phi = phi, phi_new
        r_prev, r = r, r_new
        yield s, phi, r


def _grid(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _check_t(spec: FilterSpec, t: np.ndarray, allow_zero: bool = False):
    bad = t < 0 if allow_zero else t <= 0
    if np.any(bad) or np.any(~np.isfinite(t)):
        raise ValueError("spectral values must be positive and finite")
    if np.any(t > spec.t_max * (1 + 1e-12)):
        raise ValueError(f"spectral value above t_max = {spec.t_max}")


def filter_value(spec: FilterSpec, t, allow_zero: bool = False):
    """``phi_lambda(t)``; ``allow_zero`` admits ``t = 0`` (the filter's limit value)."""
    tt, scalar = _grid(t)
    _check_t(spec, tt, allow_zero)
    if spec.method == "tikhonov":
        out = 1.0 / (tt + spec.lam)
    else:
        for _, phi, _ in _iterate(spec, tt, spec.k):
            pass
        out = phi
    return float(out[0]) if scalar else out


def residual_value(spec: FilterSpec, t, allow_zero: bool = False):
    """``r_lambda(t) = 1 - t phi_lambda(t)``."""
    tt, scalar = _grid(t)
    _check_t(spec, tt, allow_zero)
    if spec.method == "tikhonov":
        out = spec.lam / (tt + spec.lam)
    elif spec.method == "landweber":
        out = (1.0 - spec.alpha * tt) ** spec.k
    else:
        for _, _, r in _iterate(spec, tt, spec.k):
            pass
        out = r
    return float(out[0]) if scalar else out


def landweber_closed_form(alpha: float, k: int, t):
    t = np.asarray(t, dtype=float)
    return (1.0 - (1.0 - alpha * t) ** k) / t


def filter_path(spec: FilterSpec, t, ks) -> dict:
    """``{k: (phi_k(t), r_k(t))}`` for all requested iteration counts in one pass."""
    tt, _ = _grid(t)
    wanted = sorted(set(int(k) for k in ks))
    out = {}
    if spec.method == "tikhonov":
        raise ValueError("filter_path is for iterative methods")
    for s, phi, r in _iterate(spec, tt, wanted[-1]):
        if s in wanted:
            out[s] = (phi.copy(), r.copy())
    return out


# --- verification ------------------------------------------------------------

SLACK = 1.01


@dataclass
class FilterRow:
    method: str
    lam: float
    q: float
    sup_tphi: float
    sup_lamphi: float
    sup_resid: float
    emp_cq: float
    passed: bool | None  # None: no declared constant to gate against


@dataclass
class FilterReport:
    rows: list[FilterRow]

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.rows)

    def worst(self, method: str, q: float | None = None) -> dict:
        sel = [r for r in self.rows if r.method == method and (q is None or r.q == q)]
        if not sel:
            raise KeyError((method, q))
        return {
            "sup_tphi": max(r.sup_tphi for r in sel),
            "sup_lamphi": max(r.sup_lamphi for r in sel),
            "sup_resid": max(r.sup_resid for r in sel),
            "emp_cq": max(r.emp_cq for r in sel),
            "passed": None if all(r.passed is None for r in sel) else all(r.passed is not False for r in sel),
        }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "lambda", "q", "sup_tphi", "sup_lamphi", "sup_resid", "emp_cq", "pass"])
        for r in self.rows:
            w.writerow([r.method, repr(r.lam), repr(r.q), repr(r.sup_tphi), repr(r.sup_lamphi),
                        repr(r.sup_resid), repr(r.emp_cq), "" if r.passed is None else str(r.passed).lower()])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def default_t_grid(points: int = 1000) -> np.ndarray:
    return np.geomspace(1e-6, 1.0, points)


def _levels(spec: FilterSpec, lambda_grid) -> list:
    """Filter instances for each lambda; iterative methods snap to lambda = 1/k^power."""
    if spec.method == "tikhonov":
        return [replace(spec, lam=float(l), constants={}) for l in lambda_grid]
    ks = sorted({iterations_for(spec.method, float(l)) for l in lambda_grid})
    return [spec.with_k(k) for k in ks]


def verify_filter(spec_family: FilterSpec, t_grid, lambda_grid, q_list) -> FilterReport:
    """Evaluate the defining bounds of a filter family on a grid.

    For each level and each ``q`` the row records ``sup_t |t phi|``,
    ``lambda sup_t |phi|``, ``sup_t |r|`` and ``sup_t |r| t^q / lambda^q`` with
    a pass flag against the declared constants (1% slack). Rows with nothing
    declared to compare against carry ``passed=None``.
    """
    t = np.asarray(t_grid, dtype=float)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if t.size == 0 or lambda_grid.size == 0 or len(q_list) == 0:
        raise ValueError("empty grid")
    if np.any((t <= 0) | (t > spec_family.t_max)) or np.any((lambda_grid <= 0) | (lambda_grid > 1)):
        raise ValueError("grids must lie inside (0, 1]")
    levels = _levels(spec_family, lambda_grid)

    if spec_family.method == "tikhonov":
        values = {lv.lam: (filter_value(lv, t), residual_value(lv, t)) for lv in levels}
    else:
        path = filter_path(spec_family, t, [lv.k for lv in levels])
        values = {lv.lam: path[lv.k] for lv in levels}

    rows = []
    for lv in levels:
        phi, r = values[lv.lam]
        lam = lv.lam
        sup_tphi = float(np.max(np.abs(t * phi)))
        sup_lamphi = float(np.max(np.abs(phi)) * lam)
        sup_resid = float(np.max(np.abs(r)))
        lconsts = declared_constants(lv)
        for q in q_list:
            emp = float(np.max(np.abs(r) * t**q) / lam**q)
            checks = []
            if lconsts["D"] is not None:
                checks.append(sup_tphi <= lconsts["D"] * SLACK)
            if lconsts["E"] is not None:
                checks.append(sup_lamphi <= lconsts["E"] * SLACK)
            if lconsts["c0"] is not None:
                checks.append(sup_resid <= lconsts["c0"] * SLACK)
            cq = lconsts["cq"](q) if (lconsts["nu"] is not None and q <= lconsts["nu"]) else None
            if cq is not None:
                checks.append(emp <= cq * SLACK)
            rows.append(FilterRow(lv.method, lam, float(q), sup_tphi, sup_lamphi, sup_resid, emp,
                                  all(checks) if checks else None))
    return FilterReport(rows)
