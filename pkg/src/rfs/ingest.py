"""CSV datasets: loading, standardization and seeded train/test splits."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

STD_EPS = 1e-12


class DataError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    source: str = ""
    task: str = "regression"  # or "classification" (labels in {-1, +1})
    feature_names: tuple | None = None
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size or y.size < 1:
            raise DataError(f"{X.shape[0]} inputs but {y.size} labels")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains NaN or Inf")
        if self.task == "classification" and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("classification labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx])


def _resolve(path) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute():
        root = os.environ.get("RFS_DATA_DIR")
        if root and (Path(root) / p).exists():
            return Path(root) / p
    if not p.exists():
        raise DataError(f"{path}: no such file")
    return p


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_class_mapping(text: str | dict | None) -> dict | None:
    """``"0:-1,1:1"`` -> ``{"0": -1.0, "1": 1.0}``."""
    if text is None or isinstance(text, dict):
        return text
    out = {}
    for item in str(text).split(","):
        if not item.strip():
            continue
        key, _, val = item.partition(":")
        out[key.strip()] = float(val)
    return out or None


def load_csv(path, label_column=-1, limit: int | None = None, class_mapping=None,
             header: bool | None = None) -> Dataset:
    """Read a numeric CSV file.

    ``label_column`` is a column name (needs a header) or an index (negative
    counts from the end). ``header=None`` detects a header from the first line.
    ``class_mapping`` maps raw label strings to -1/+1 and tags the dataset as
    classification. At most ``limit`` rows are kept, in file order.
    """
    if limit is not None and limit < 1:
        raise DataError("limit must be at least 1")
    mapping = parse_class_mapping(class_mapping)
    p = _resolve(path)
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        rows = []
        names = None
        label_idx = None
        width = None
        for lineno, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            cells = [c.strip() for c in raw]
            if width is None:
                has_header = header if header is not None else not all(_is_number(c) for c in cells)
                width = len(cells)
                if has_header:
                    names = cells
                if isinstance(label_column, str) and not _is_number(label_column):
                    if names is None or label_column not in names:
                        raise DataError(f"{p}: label column {label_column!r} not found")
                    label_idx = names.index(label_column)
                else:
                    label_idx = int(label_column)
                    if not -width <= label_idx < width:
                        raise DataError(f"{p}: label column {label_idx} out of range for {width} columns")
                    label_idx %= width
                if has_header:
                    continue
            if len(cells) != width:
                raise DataError(f"{p}: line {lineno}: expected {width} fields, found {len(cells)}")
            label_raw = cells[label_idx]
            feats = []
            for j, c in enumerate(cells):
                if j == label_idx:
                    continue
                try:
                    v = float(c)
                except ValueError:
                    raise DataError(f"{p}: line {lineno}: malformed value {c!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{p}: line {lineno}: non-finite value {c!r}")
                feats.append(v)
            if mapping is not None:
                key = label_raw
                if key not in mapping and _is_number(key):
                    # tolerate "1.0" vs "1"
                    alt = [k for k in mapping if _is_number(k) and float(k) == float(key)]
                    key = alt[0] if alt else key
                if key not in mapping:
                    raise DataError(f"{p}: line {lineno}: label {label_raw!r} not in class mapping")
                label = mapping[key]
            else:
                try:
                    label = float(label_raw)
                except ValueError:
                    raise DataError(f"{p}: line {lineno}: malformed label {label_raw!r}") from None
                if not math.isfinite(label):
                    raise DataError(f"{p}: line {lineno}: non-finite label {label_raw!r}")
            rows.append((feats, label))
            if limit is not None and len(rows) >= limit:
                break
    if not rows:
        raise DataError(f"{p}: no data rows")
    X = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), width - 1)
    y = np.array([r[1] for r in rows], dtype=float)
    feat_names = None
    if names is not None:
        feat_names = tuple(n for j, n in enumerate(names) if j != label_idx)
    task = "classification" if mapping is not None else "regression"
    return Dataset(X, y, source=str(p), task=task, feature_names=feat_names)


def save_csv(ds: Dataset, path, label_name: str = "y") -> None:
    """Write features then label, with a header; floats at full precision."""
    names = list(ds.feature_names) if ds.feature_names else [f"x{j}" for j in range(ds.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [label_name])
        for xi, yi in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray  # 0 marks a constant column

    def apply(self, ds: Dataset) -> Dataset:
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (ds.X - self.mean) / safe
        Z[:, self.std == 0] = 0.0
        return replace(ds, X=Z)


def standardize(ds: Dataset) -> tuple[Dataset, Standardizer]:
    """Zero mean, unit (population) std per column; constant columns become zeros."""
    if ds.n < 2:
        raise DataError("standardization needs at least two rows")
    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    std = np.where(std < STD_EPS, 0.0, std)
    tr = Standardizer(mean, std)
    return tr.apply(ds), tr


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train fraction must lie in (0, 1)")
    n = ds.n
    n_train = int(math.floor(train_fraction * n + 1e-9))
    if n_train < 1 or n_train > n - 1:
        raise DataError(f"split of {n} rows at fraction {train_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


def make_blobs(n: int, d: int = 14, separation: float = 1.0, seed: int = 0) -> Dataset:
    """Two isotropic Gaussian classes with means ``+-separation/2 * e / sqrt(d)``.

    Stand-in for a real binary classification table when none is available.
    """
    if n < 2 or d < 1:
        raise DataError("need n >= 2 and d >= 1")
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    direction = np.ones(d) / math.sqrt(d)
    X = rng.standard_normal((n, d)) + 0.5 * separation * y[:, None] * direction
    return Dataset(X, y, source=f"blobs(d={d},separation={separation},seed={seed})",
                   task="classification", feature_names=tuple(f"x{j}" for j in range(d)))
