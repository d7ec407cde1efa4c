"""CSV sinks: detail rows, per-cell aggregates and small summary tables.

Floats are written with ``repr`` so files round-trip exactly and aggregates
can be recomputed bit-for-bit from the detail file.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

DETAIL_COLUMNS = ["experiment_id", "n", "d", "M", "T", "rep", "lambda", "alpha", "beta",
                  "train_mse", "test_mse", "zero_one", "l2_analytic", "wall_ms", "status"]
METRICS = ("train_mse", "test_mse", "zero_one", "l2_analytic")
AGG_KEYS = ("n", "M", "T")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path, columns, rows) -> Path:
    """Write dict rows under a header; the single place result files are written."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    return path


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def sidecar(path, suffix: str) -> Path:
    """``out.csv`` -> ``out_<suffix>.csv``."""
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}")


def sort_detail(rows) -> list[dict]:
    return sorted(rows, key=lambda r: (r["n"], r["M"], r["T"], r["rep"]))


def mean_stderr(values) -> tuple[float | None, float | None]:
    """Order-independent mean and standard error (``None`` when undefined)."""
    values = [float(v) for v in values]
    if not values:
        return None, None
    m = math.fsum(values) / len(values)
    if len(values) < 2:
        return m, None
    var = math.fsum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var / len(values))


def aggregate(rows) -> tuple[list[str], list[dict]]:
    """Per-(n, M, T) mean and standard error of each metric over successful rows.

    Accepts rows as produced by the runners or as read back from a detail CSV.
    """
    groups: dict[tuple, list] = {}
    for row in rows:
        key = tuple(int(row[k]) for k in AGG_KEYS)
        groups.setdefault(key, []).append(row)
    columns = list(AGG_KEYS) + ["count"]
    for m in METRICS:
        columns += [f"{m}_mean", f"{m}_stderr"]
    out = []
    for key in sorted(groups):
        ok = [r for r in groups[key] if r["status"] == "ok"]
        agg = dict(zip(AGG_KEYS, key), count=len(ok))
        for m in METRICS:
            vals = [r[m] for r in ok if r[m] not in (None, "")]
            agg[f"{m}_mean"], agg[f"{m}_stderr"] = mean_stderr(vals)
        out.append(agg)
    return columns, out
