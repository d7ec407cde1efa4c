"""Acceptance gate: one test per criterion, each reporting a single PASS/FAIL line.

The rate and plateau criteria run the shipped configs in ``configs/`` end to end
and take several minutes in total.
"""

import time
from pathlib import Path

import pytest

from conftest import record_criterion
from rfs.filters import FilterSpec, default_t_grid, verify_filter
from rfs.harness import load_config, run_rates, run_sweep
from rfs.harness.verify import equivalence_rows, filter_families, ntk_zscores, rff_convergence

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _cfg(name, kind, tmp_path, **overrides):
    over = {"experiment.out": str(tmp_path / f"{kind}.csv")}
    over.update({k.replace("__", "."): str(v) for k, v in overrides.items()})
    return load_config(CONFIGS / name if name else None, kind, over)


def _families(tmp_path):
    cfg = _cfg("verify.ini", "verify", tmp_path)
    return {label: (fam, grid) for label, fam, grid in filter_families(cfg)}, cfg


def test_criterion_1_primal_dual_equivalence(tmp_path):
    cfg = _cfg("verify.ini", "verify", tmp_path)
    assert (cfg.verify.instances, cfg.verify.eq_n, cfg.verify.eq_M) == (5, 40, 20)
    start = time.perf_counter()
    rows = {r["subject"]: r for r in equivalence_rows(cfg)}
    elapsed = time.perf_counter() - start
    tol = {"tikhonov": 1e-8, "landweber": 1e-6, "heavy-ball": 1e-6}
    ok = all(rows[m]["value"] <= t for m, t in tol.items()) and elapsed < 5.0
    detail = ", ".join(f"{m} {rows[m]['value']:.2e}<={t:g}" for m, t in tol.items())
    record_criterion(1, ok, f"max-abs {detail}; {elapsed:.2f}s < 5s")
    assert ok


def test_criterion_2_filter_constants(tmp_path):
    fams, cfg = _families(tmp_path)
    start = time.perf_counter()
    t = default_t_grid(1000)
    assert t.size == 1000 and fams["tikhonov"][1].size == 1000
    checks = []

    tik = verify_filter(fams["tikhonov"][0], t, fams["tikhonov"][1], [0.5, 1.0])
    for key in ("sup_tphi", "sup_lamphi", "sup_resid"):
        checks.append((f"tikhonov {key}", tik.worst("tikhonov")[key], 1.01))
    for q in (0.5, 1.0):
        checks.append((f"tikhonov c_{q:g}", tik.worst("tikhonov", q)["emp_cq"], 1.01))

    lw_spec = fams["landweber"][0]
    alpha = lw_spec.alpha
    lw = verify_filter(lw_spec, t, fams["landweber"][1], [0.5, 1.0, 2.0, 4.0])
    for q in (0.5, 1.0, 2.0, 4.0):
        checks.append((f"landweber c_{q:g}", lw.worst("landweber", q)["emp_cq"], (q / alpha) ** q * 1.01))

    hb = verify_filter(fams["heavy-ball"][0], t, fams["heavy-ball"][1], [0.0])
    checks.append(("heavy-ball sup|t phi|", hb.worst("heavy-ball")["sup_tphi"], 2.02))
    elapsed = time.perf_counter() - start

    ok = all(v <= b for _, v, b in checks) and elapsed < 10.0
    bad = [f"{name} {v:.4g}>{b:.4g}" for name, v, b in checks if v > b]
    record_criterion(2, ok, f"{len(checks)} bounds checked, {len(bad)} violated {bad}; "
                            f"heavy-ball sup|t phi| = {checks[-1][1]:.4f}; {elapsed:.2f}s < 10s")
    assert ok


def test_criterion_3_saturation(tmp_path):
    fams, _ = _families(tmp_path)
    start = time.perf_counter()
    t = default_t_grid(1000)
    tik = verify_filter(fams["tikhonov"][0], t, fams["tikhonov"][1], [2.0]).worst("tikhonov", 2.0)["emp_cq"]
    lw_spec = fams["landweber"][0]
    lw = verify_filter(lw_spec, t, fams["landweber"][1], [2.0]).worst("landweber", 2.0)["emp_cq"]
    bound = (2.0 / lw_spec.alpha) ** 2 * 1.01
    elapsed = time.perf_counter() - start
    ok = tik > 10.0 and lw <= bound and elapsed < 10.0
    record_criterion(3, ok, f"tikhonov q=2 sup ratio {tik:.4g} > 10, landweber q=2 {lw:.4g} <= {bound:.4g}; "
                            f"{elapsed:.2f}s < 10s")
    assert ok


def test_criterion_4_monte_carlo_convergence():
    start = time.perf_counter()
    m_small, m_large = rff_convergence(0)
    z = ntk_zscores(0)
    elapsed = time.perf_counter() - start
    ratio = m_small / m_large
    ok = 2.5 <= ratio <= 6.0 and z.size == 20 and z.max() <= 5.0 and elapsed < 60.0
    record_criterion(4, ok, f"rff median ratio M=256/4096 {ratio:.3f} in [2.5, 6]; "
                            f"ntk relu max z {z.max():.2f} <= 5 on {z.size} pairs; {elapsed:.1f}s < 60s")
    assert ok


@pytest.mark.slow
def test_criterion_5_gd_rate(tmp_path):
    cfg = _cfg("rates_gd.ini", "rates", tmp_path)
    assert cfg.grid.n_list == [512, 1024, 2048, 4096, 8192] and cfg.experiment.repetitions == 20
    assert (cfg.data.r, cfg.data.b, cfg.filter.method) == (0.5, 1.0, "landweber")
    start = time.perf_counter()
    res = run_rates(cfg)
    elapsed = time.perf_counter() - start
    slope = res.extra["slope_sq"]
    ok = abs(slope - (-0.5)) <= 0.15 and elapsed < 600
    record_criterion(5, ok, f"squared L2 error slope {slope:.4f} (stderr {res.extra['stderr_sq']:.3f}) "
                            f"vs -0.5 +/- 0.15; {elapsed:.0f}s < 600s")
    assert ok


@pytest.mark.slow
def test_criterion_6_heavy_ball_rate(tmp_path):
    cfg = _cfg("rates_heavy_ball.ini", "rates", tmp_path)
    assert cfg.grid.n_list == [512, 1024, 2048, 4096, 8192] and cfg.experiment.repetitions == 20
    assert (cfg.data.r, cfg.data.b, cfg.filter.method) == (1.5, 0.5, "heavy-ball")
    start = time.perf_counter()
    res = run_rates(cfg)
    elapsed = time.perf_counter() - start
    slope, target = res.extra["slope_err"], -3 / 7
    ok = abs(slope - target) <= 0.15 and elapsed < 600
    record_criterion(6, ok, f"L2 error slope {slope:.4f} (stderr {res.extra['stderr_err']:.3f}) "
                            f"vs {target:.4f} +/- 0.15; {elapsed:.0f}s < 600s")
    assert ok


@pytest.mark.slow
def test_criterion_7_feature_plateau(tmp_path):
    cfg = _cfg("sweep_plateau.ini", "sweep", tmp_path)
    assert (cfg.data.n, cfg.data.source) == (2000, "synthetic")
    root = 45  # ceil(sqrt(2000))
    m_low, m_mid, m_high = 12, 4 * root, 16 * root
    assert {m_low, m_mid, m_high} <= set(cfg.grid.M_list)
    start = time.perf_counter()
    res = run_sweep(cfg)
    elapsed = time.perf_counter() - start

    def best(M):
        return min(a["test_mse_mean"] for a in res.aggregate if a["M"] == M and a["count"] > 0)

    low, mid, high = best(m_low), best(m_mid), best(m_high)
    plateau = abs(high - mid) / mid
    gap = low / high - 1
    ok = plateau <= 0.10 and gap > 0.25 and elapsed < 300
    record_criterion(7, ok, f"best-T test MSE M={m_high}: {high:.4f}, M={m_mid}: {mid:.4f} "
                            f"(rel diff {plateau:.3f} <= 0.10), M={m_low}: {low:.4f} (excess {gap:.3f} > 0.25); "
                            f"{elapsed:.0f}s < 300s")
    assert ok


def test_criterion_8_determinism(tmp_path):
    start = time.perf_counter()
    paths = []
    for threads in (1, 8):
        cfg = _cfg("sweep_plateau.ini", "sweep", tmp_path / f"t{threads}", experiment__threads=threads,
                   experiment__repetitions=4, data__n=500, data__n_test=300,
                   grid__M_list="6,23,90,360", grid__T_list="1,8,64,512")
        paths.append(run_sweep(cfg).aggregate_path)
    elapsed = time.perf_counter() - start
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = same and elapsed < 60
    record_criterion(8, ok, f"aggregate CSVs from 1 and 8 threads byte-identical: {same}; {elapsed:.1f}s < 60s")
    assert ok
