"""Sweep and rate experiments.

Each (rep, M) sweep cell or (n, rep) rate cell is an independent work item
seeded from :func:`cell_seed`, so results do not depend on the order or the
number of threads that execute them. Workers only compute; rows are sorted
and written by the calling thread.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from .. import ingest, synth
from ..estimators import DivergenceError, fit_rf_krr, iterate_rf
from ..featuremaps import sample_feature_map
from ..filters import LAMBDA_POWER, FilterSpec
from ..spectrum import TheoryParams, theory_schedule
from .config import ConfigError, ExperimentConfig, cell_seed
from .output import DETAIL_COLUMNS, aggregate, sidecar, sort_detail, write_table

POWER_ITERATIONS = 30
SPECTRAL_MARGIN = 1.05


# --- data and features -----------------------------------------------------------

@dataclass
class Problem:
    train: ingest.Dataset
    test: ingest.Dataset
    model: synth.SyntheticModel | None = None


def build_model(cfg: ExperimentConfig) -> synth.SyntheticModel | None:
    d = cfg.data
    if d.source != "synthetic":
        return None
    try:
        return synth.build_model(cfg.model_J(), d.b, d.r, d.R, d.noise_sigma,
                                 seed=d.model_seed, coef_decay=d.coef_decay)
    except ValueError as exc:
        raise ConfigError(f"synthetic model: {exc}") from None


def load_source(cfg: ExperimentConfig) -> ingest.Dataset | None:
    """The full CSV table, loaded once per run (``None`` for generated sources)."""
    d = cfg.data
    if d.source != "csv":
        return None
    label = d.label_column
    label = int(label) if label.lstrip("-").isdigit() else label
    return ingest.load_csv(d.path, label_column=label, limit=d.limit or None,
                           class_mapping=d.class_mapping or None)


def make_problem(cfg: ExperimentConfig, n: int, seed: int, model=None, table=None) -> Problem:
    d = cfg.data
    if d.source == "synthetic":
        return Problem(synth.sample_synthetic(model, n, seed=(seed, 0)),
                       synth.sample_synthetic(model, d.n_test, seed=(seed, 1)), model)
    if d.source == "blobs":
        train = ingest.make_blobs(n, d.d, d.separation, seed=(seed, 0))
        test = ingest.make_blobs(d.n_test, d.d, d.separation, seed=(seed, 1))
    else:
        train, test = ingest.split(table, d.train_fraction, seed)
    if d.standardize:
        train, tr = ingest.standardize(train)
        test = tr.apply(test)
    return Problem(train, test)


def make_features(cfg: ExperimentConfig, d: int, M: int, seed: int, model=None):
    f = cfg.features
    if f.kind == "model-fourier":
        return synth.model_features(model, M, seed)
    if f.kind == "gaussian-rff":
        return sample_feature_map("gaussian-rff", d, M, {"bandwidth": f.bandwidth}, seed=seed)
    scales = {"tau": f.tau, "gamma": f.gamma, "input_radius": f.input_radius}
    return sample_feature_map("ntk", d, M, scales, seed=seed, activation=f.activation)


def largest_eigenvalue(Phi: np.ndarray, iterations: int = POWER_ITERATIONS) -> float:
    """Power iteration for the top eigenvalue of ``Phi^T Phi / n`` (deterministic start)."""
    n, D = Phi.shape
    v = np.full(D, 1.0 / math.sqrt(D))
    lam = 0.0
    for _ in range(iterations):
        w = Phi.T @ (Phi @ v) / n
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def step_size(cfg: ExperimentConfig, Phi: np.ndarray, kappa_sq: float) -> tuple[float, float]:
    """``(alpha, t_max)`` for the configured rule, with ``alpha * t_max <= 1``."""
    rule = cfg.filter.alpha
    if rule == "kappa":
        return 0.5 / kappa_sq, kappa_sq
    if rule == "spectral":
        t_max = SPECTRAL_MARGIN * largest_eigenvalue(Phi)
        return 1.0 / t_max, t_max
    alpha = float(rule)
    return alpha, 1.0 / alpha


def make_filter(cfg: ExperimentConfig, alpha: float, t_max: float, k: int) -> FilterSpec:
    f = cfg.filter
    beta = f.beta if f.method == "heavy-ball" else 0.0
    return FilterSpec(f.method, alpha=alpha, beta=beta, k=k, schedule=f.schedule, nu=f.nu, t_max=t_max)


def _metrics(prob: Problem, fmap, theta, F_train, F_test) -> dict:
    pred_train = F_train @ theta
    pred_test = F_test @ theta
    out = {
        "train_mse": float(np.mean((pred_train - prob.train.y) ** 2)),
        "test_mse": float(np.mean((pred_test - prob.test.y) ** 2)),
        "zero_one": None,
        "l2_analytic": None,
    }
    if prob.test.task == "classification":
        out["zero_one"] = float(np.mean(np.where(pred_test >= 0, 1.0, -1.0) != prob.test.y))
    if prob.model is not None and fmap.kind == "model-fourier":
        out["l2_analytic"] = synth.analytic_l2_error(prob.model, synth.fourier_coefficients(fmap, theta))
    return out


def _failed(message: str) -> dict:
    return {m: None for m in ("train_mse", "test_mse", "zero_one", "l2_analytic")} | {"status": f"error: {message}"}


def _pool_map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- sweep -----------------------------------------------------------------------

@dataclass
class RunResult:
    detail_path: Path
    aggregate_path: Path
    detail: list = field(repr=False)
    aggregate: list = field(repr=False)
    extra: dict = field(default_factory=dict)


def sweep_M_list(cfg: ExperimentConfig, n: int, d: int) -> list[int]:
    if cfg.grid.M_list:
        return sorted(set(cfg.grid.M_list))
    return sorted({math.ceil(c * math.sqrt(n) * d) for c in cfg.grid.M_factors})


def _sweep_cell(cfg: ExperimentConfig, model, table, n: int, rep: int, M: int, T_list) -> list[dict]:
    start = time.perf_counter()
    base = cfg.experiment.base_seed
    method = cfg.filter.method
    rows = []

    def row(T, lam, alpha, beta, metrics, d):
        return {"experiment_id": cfg.experiment_id, "n": n, "d": d, "M": M, "T": T, "rep": rep,
                "lambda": lam, "alpha": alpha, "beta": beta,
                "wall_ms": round((time.perf_counter() - start) * 1000.0, 3), "status": "ok", **metrics}

    try:
        prob = make_problem(cfg, n, cell_seed(base, rep, 0, 0, n), model, table)
        d = prob.train.d
        fmap = make_features(cfg, d, M, cell_seed(base, rep, M, 0, n), model)
        F_train, F_test = fmap(prob.train.X), fmap(prob.test.X)
    except Exception as exc:  # the cell fails, the run goes on
        return [{"experiment_id": cfg.experiment_id, "n": n, "d": None, "M": M, "T": T, "rep": rep,
                 "lambda": None, "alpha": None, "beta": None, "wall_ms": None, **_failed(str(exc))}
                for T in T_list]

    if method == "tikhonov":
        for T in T_list:
            lam = 1.0 / T
            try:
                st = fit_rf_krr(F_train, prob.train.y, lam, fmap.fingerprint)
                rows.append(row(T, lam, None, None, _metrics(prob, fmap, st.theta, F_train, F_test), d))
            except Exception as exc:
                rows.append(row(T, lam, None, None, _failed(str(exc)), d))
        return rows

    alpha = beta = None
    wanted = set(T_list)
    done = set()
    try:
        alpha, t_max = step_size(cfg, F_train, fmap.kappa_sq)
        spec = make_filter(cfg, alpha, t_max, max(T_list))
        beta = spec.beta if method == "heavy-ball" else None
        for s, theta, _ in iterate_rf(F_train, prob.train.y, spec):
            if s in wanted:
                rows.append(row(s, 1.0 / s ** LAMBDA_POWER[method], alpha, beta,
                                _metrics(prob, fmap, theta, F_train, F_test), d))
                done.add(s)
    except (DivergenceError, ValueError, np.linalg.LinAlgError) as exc:
        for T in sorted(wanted - done):
            rows.append(row(T, 1.0 / T ** LAMBDA_POWER[method], alpha, beta, _failed(str(exc)), d))
    return rows


def run_sweep(cfg: ExperimentConfig) -> RunResult:
    """Train/test error over the (M, T) grid, ``repetitions`` times per cell."""
    model = build_model(cfg)
    table = load_source(cfg)
    if table is not None:
        n = int(math.floor(cfg.data.train_fraction * table.n + 1e-9))
        d = table.d
    else:
        n = cfg.data.n
        d = 1 if cfg.data.source == "synthetic" else cfg.data.d
    M_list = sweep_M_list(cfg, n, d)
    T_list = sorted(set(cfg.grid.T_list))
    items = [(rep, M) for rep in range(cfg.experiment.repetitions) for M in M_list]
    parts = _pool_map(lambda it: _sweep_cell(cfg, model, table, n, it[0], it[1], T_list),
                      items, cfg.experiment.threads)
    detail = sort_detail([r for part in parts for r in part])
    columns, agg = aggregate(detail)
    out = cfg.out_path
    detail_path = write_table(out, DETAIL_COLUMNS, detail)
    agg_path = write_table(sidecar(out, "agg"), columns, agg)
    return RunResult(detail_path, agg_path, detail, agg, {"M_list": M_list, "T_list": T_list, "n": n})


# --- rates -----------------------------------------------------------------------

def theory_params(cfg: ExperimentConfig) -> TheoryParams:
    d, t = cfg.data, cfg.theory
    try:
        return TheoryParams(d.r, d.b, R=d.R, C_lambda=t.C_lambda, C_M=t.C_M)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _rates_cell(cfg: ExperimentConfig, model, params, n: int, rep: int) -> dict:
    start = time.perf_counter()
    base = cfg.experiment.base_seed
    method = cfg.filter.method
    lam, M, k = theory_schedule(n, params, method)
    row = {"experiment_id": cfg.experiment_id, "n": n, "d": 1, "M": M, "T": k if method != "tikhonov" else 0,
           "rep": rep, "lambda": lam, "alpha": None, "beta": None}
    try:
        prob = make_problem(cfg, n, cell_seed(base, rep, 0, 0, n), model)
        fmap = make_features(cfg, 1, M, cell_seed(base, rep, M, row["T"], n), model)
        F_train, F_test = fmap(prob.train.X), fmap(prob.test.X)
        if method == "tikhonov":
            theta = fit_rf_krr(F_train, prob.train.y, lam, fmap.fingerprint).theta
        else:
            alpha, t_max = step_size(cfg, F_train, fmap.kappa_sq)
            spec = make_filter(cfg, alpha, t_max, k)
            row["alpha"] = alpha
            row["beta"] = spec.beta if method == "heavy-ball" else None
            theta = None
            for _, theta, _ in iterate_rf(F_train, prob.train.y, spec):
                pass
        row.update(_metrics(prob, fmap, theta, F_train, F_test), status="ok")
    except Exception as exc:
        row.update(_failed(str(exc)))
    row["wall_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
    return row


SLOPE_COLUMNS = ["metric", "slope", "stderr", "theoretical", "n_points"]


def fit_slope(ns, values) -> tuple[float, float]:
    """Least-squares slope of ``log value`` against ``log n`` and its standard error."""
    fit = scipy.stats.linregress(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)))
    return float(fit.slope), float(fit.stderr)


def run_rates(cfg: ExperimentConfig) -> RunResult:
    """Learning curve along the theory schedule and its log-log slope.

    ``extra`` holds ``slope_err`` (log mean L2 error), ``slope_sq`` (log mean
    squared error), their standard errors and the theoretical exponents.
    """
    model = build_model(cfg)
    params = theory_params(cfg)
    ns = sorted(set(cfg.grid.n_list))
    for n in ns:
        if n < params.n0:
            raise ConfigError(f"n = {n} is below n0 = {params.n0:.4g} for r={params.r}, b={params.b}")
    items = [(n, rep) for n in ns for rep in range(cfg.experiment.repetitions)]
    detail = sort_detail(_pool_map(lambda it: _rates_cell(cfg, model, params, *it), items,
                                   cfg.experiment.threads))
    columns, agg = aggregate(detail)

    curve = []
    for a in agg:
        ok = [r["l2_analytic"] for r in detail if r["n"] == a["n"] and r["status"] == "ok"]
        if ok:
            curve.append((a["n"], a["l2_analytic_mean"], math.fsum(e * e for e in ok) / len(ok)))
    theo = params.rate_exponent
    extra = {"theoretical_err": theo, "theoretical_sq": 2 * theo, "curve": curve}
    slopes = []
    if len(curve) >= 2:
        n_ok = [c[0] for c in curve]
        extra["slope_err"], extra["stderr_err"] = fit_slope(n_ok, [c[1] for c in curve])
        extra["slope_sq"], extra["stderr_sq"] = fit_slope(n_ok, [c[2] for c in curve])
        slopes = [
            {"metric": "l2_error", "slope": extra["slope_err"], "stderr": extra["stderr_err"],
             "theoretical": theo, "n_points": len(curve)},
            {"metric": "l2_error_squared", "slope": extra["slope_sq"], "stderr": extra["stderr_sq"],
             "theoretical": 2 * theo, "n_points": len(curve)},
        ]
    out = cfg.out_path
    detail_path = write_table(out, DETAIL_COLUMNS, detail)
    agg_path = write_table(sidecar(out, "agg"), columns, agg)
    extra["slope_path"] = write_table(sidecar(out, "slope"), SLOPE_COLUMNS, slopes)
    return RunResult(detail_path, agg_path, detail, agg, extra)
