"""Verification suite: filter bounds, saturation, primal-dual equivalence, Monte-Carlo kernels.

Every check becomes a report row. Gated rows decide the exit status; ungated
rows are informational (for example Tikhonov's saturation beyond q = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..estimators import fit_kernel_oracle, fit_rf
from ..featuremaps import KernelOracle, limit_kernel, rf_gram, rf_kernel_terms, sample_feature_map
from ..filters import (SLACK, FilterReport, FilterSpec, declared_constants, default_t_grid, filter_path,
                       iterations_for, verify_filter)
from .config import ExperimentConfig, cell_seed
from .output import sidecar, write_table

REPORT_COLUMNS = ["check", "subject", "param", "value", "bound", "gated", "passed"]
FILTER_COLUMNS = ["method", "lambda", "q", "sup_tphi", "sup_lamphi", "sup_resid", "emp_cq", "pass"]

SATURATION_LEVEL = 10.0
IDENTITY_TOL = 1e-10
EQUIV_TOL = {"tikhonov": 1e-8, "landweber": 1e-6, "heavy-ball": 1e-6, "nesterov": 1e-6}
EQUIV_LAMBDA = 1e-2
RFF_PAIRS, RFF_M = 200, (256, 4096)
RFF_RATIO = (2.5, 6.0)
NTK_PAIRS, NTK_M, NTK_Z = 20, 10_000, 5.0


@dataclass
class VerifyResult:
    rows: list
    report_path: Path
    filters_path: Path
    filter_reports: dict = field(repr=False, default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows if r["gated"])

    def failures(self) -> list:
        return [r for r in self.rows if r["gated"] and not r["passed"]]

    def find(self, check: str, subject: str | None = None, param: str | None = None) -> list:
        return [r for r in self.rows if r["check"] == check
                and (subject is None or r["subject"] == subject) and (param is None or r["param"] == param)]


def _row(check, subject, param, value, bound=None, gated=True, passed=None):
    if passed is None:
        passed = bound is None or value <= bound
    return {"check": check, "subject": subject, "param": param, "value": float(value),
            "bound": None if bound is None else float(bound), "gated": bool(gated and bound is not None),
            "passed": bool(passed)}


def filter_families(cfg: ExperimentConfig) -> list[tuple[str, FilterSpec, np.ndarray]]:
    """``(label, family, lambda grid)`` for every filter the suite checks."""
    v = cfg.verify
    lam_grid = np.geomspace(v.lambda_min, 1.0, v.lambda_points)
    hb_grid = 1.0 / np.arange(1, v.heavy_ball_k_max + 1, dtype=float) ** 2
    return [
        ("tikhonov", FilterSpec("tikhonov", lam=1.0), lam_grid),
        ("landweber", FilterSpec("landweber", alpha=v.landweber_alpha, k=1), lam_grid),
        ("heavy-ball", FilterSpec("heavy-ball", alpha=1.0, beta=v.heavy_ball_beta, k=1), hb_grid),
        ("heavy-ball-nu", FilterSpec("heavy-ball", alpha=1.0, k=1, schedule="nu", nu=cfg.filter.nu), hb_grid),
        ("nesterov", FilterSpec("nesterov", alpha=1.0, k=1), hb_grid),
    ]


def filter_rows(label: str, family: FilterSpec, report: FilterReport, q_list) -> list[dict]:
    consts = declared_constants(family)
    worst = report.worst(family.method)
    rows = []
    for param, key in (("D", "sup_tphi"), ("E", "sup_lamphi"), ("c0", "sup_resid")):
        bound = consts[param]
        if param == "E" and family.method == "landweber":
            bound = family.alpha
        rows.append(_row("filter-bound", label, param, worst[key], None if bound is None else bound * SLACK))
    nu = consts["nu"]
    for q in q_list:
        cq = consts["cq"](q) if (nu is not None and q <= nu) else None
        value = report.worst(family.method, float(q))["emp_cq"]
        rows.append(_row("qualification", label, f"q={q:g}", value, None if cq is None else cq * SLACK))
    return rows


def residual_identity(family: FilterSpec, t: np.ndarray, ks) -> float:
    """``max |r + t phi - 1|`` with ``r`` and ``phi`` from their separate recurrences."""
    path = filter_path(family, t, ks)
    return max(float(np.max(np.abs(r + t * phi - 1.0))) for phi, r in path.values())


def equivalence_rows(cfg: ExperimentConfig) -> list[dict]:
    """Feature-space fit versus the kernel-space oracle on ``K_M``, on random small problems."""
    v = cfg.verify
    rows = []
    d = 3
    for method, tol in EQUIV_TOL.items():
        worst = 0.0
        for i in range(v.instances):
            seed = cell_seed(cfg.experiment.base_seed, i, v.eq_M, 0, v.eq_n)
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((v.eq_n, d))
            y = np.sin(X[:, 0]) + 0.1 * rng.standard_normal(v.eq_n)
            X_test = rng.standard_normal((10, d))
            fmap = sample_feature_map("gaussian-rff", d, v.eq_M, seed=seed)
            if method == "tikhonov":
                spec = FilterSpec("tikhonov", lam=EQUIV_LAMBDA, t_max=fmap.kappa_sq)
            else:
                spec = FilterSpec(method, alpha=1.0 / fmap.kappa_sq, beta=v.heavy_ball_beta if method == "heavy-ball" else 0.0,
                                  k=v.eq_k, t_max=fmap.kappa_sq)
            theta = fit_rf(fmap(X), y, spec).theta
            primal = fmap(X_test) @ theta
            dual = rf_gram(fmap, X_test, X) @ fit_kernel_oracle(rf_gram(fmap, X), y, spec)
            worst = max(worst, float(np.max(np.abs(primal - dual))))
        rows.append(_row("equivalence", method, f"instances={v.instances}", worst, tol))
    return rows


def rff_convergence(base_seed: int) -> tuple[float, float]:
    """Median ``|K_M - K|`` over random pairs for the two feature counts."""
    rng = np.random.default_rng(cell_seed(base_seed, 0, 0, 0, RFF_PAIRS))
    d = 3
    X = rng.standard_normal((RFF_PAIRS, d)) * 0.5
    Y = rng.standard_normal((RFF_PAIRS, d)) * 0.5
    exact = np.exp(-0.5 * np.sum((X - Y) ** 2, axis=1))
    medians = []
    for M in RFF_M:
        fmap = sample_feature_map("gaussian-rff", d, M, seed=cell_seed(base_seed, 0, M, 0, RFF_PAIRS))
        approx = np.sum(fmap(X) * fmap(Y), axis=1)
        medians.append(float(np.median(np.abs(approx - exact))))
    return medians[0], medians[1]


def ntk_zscores(base_seed: int) -> np.ndarray:
    """``|K_M - K| / se`` for the relu NTK on pairs inside the unit ball."""
    rng = np.random.default_rng(cell_seed(base_seed, 1, 0, 0, NTK_PAIRS))
    d = 3
    fmap = sample_feature_map("ntk", d, NTK_M, seed=cell_seed(base_seed, 1, NTK_M, 0, NTK_PAIRS), activation="relu")
    oracle = KernelOracle.for_map(fmap)
    z = []
    for _ in range(NTK_PAIRS):
        x, y = (u / max(1.0, np.linalg.norm(u)) for u in rng.standard_normal((2, d)) * 0.6)
        terms = rf_kernel_terms(fmap, x, y)
        se = float(np.std(terms, ddof=1) / math.sqrt(terms.size))
        z.append(abs(float(terms.mean()) - limit_kernel(oracle, x, y)) / se)
    return np.array(z)


def run_verify(cfg: ExperimentConfig) -> VerifyResult:
    v = cfg.verify
    t = default_t_grid(v.t_points)
    rows, reports, filter_table = [], {}, []
    for label, family, lam_grid in filter_families(cfg):
        report = verify_filter(family, t, lam_grid, v.q_list)
        reports[label] = report
        rows += filter_rows(label, family, report, v.q_list)
        if family.method != "tikhonov":
            ks = sorted({iterations_for(family.method, float(l)) for l in lam_grid})
            rows.append(_row("residual-identity", label, "max|r+t*phi-1|", residual_identity(family, t, ks), IDENTITY_TOL))
        for r in report.rows:
            filter_table.append({"method": label, "lambda": r.lam, "q": r.q, "sup_tphi": r.sup_tphi,
                                 "sup_lamphi": r.sup_lamphi, "sup_resid": r.sup_resid, "emp_cq": r.emp_cq,
                                 "pass": r.passed})
    if 2.0 in [float(q) for q in v.q_list]:
        sat = reports["tikhonov"].worst("tikhonov", 2.0)["emp_cq"]
        rows.append(_row("saturation", "tikhonov", "q=2", sat, SATURATION_LEVEL, gated=False,
                         passed=sat > SATURATION_LEVEL))

    rows += equivalence_rows(cfg)

    m_small, m_large = rff_convergence(cfg.experiment.base_seed)
    ratio = m_small / m_large
    rows.append(_row("mc-convergence", "gaussian-rff", f"median ratio M={RFF_M[0]}/{RFF_M[1]}", ratio,
                     RFF_RATIO[1], passed=RFF_RATIO[0] <= ratio <= RFF_RATIO[1]))
    z = ntk_zscores(cfg.experiment.base_seed)
    rows.append(_row("mc-convergence", "ntk-relu", f"max z over {NTK_PAIRS} pairs, M={NTK_M}", float(z.max()), NTK_Z))

    out = cfg.out_path
    report_path = write_table(out, REPORT_COLUMNS, rows)
    filters_path = write_table(sidecar(out, "filters"), FILTER_COLUMNS, filter_table)
    return VerifyResult(rows, report_path, filters_path, reports)
