"""Experiment configuration: ``[section]`` / ``key = value`` files plus CLI overrides.

Every key ``k`` of section ``s`` is also a CLI flag ``--s.k``; values given on
the command line win over the file.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import math
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


def _ints(text):
    return [int(v) for v in _split(text)]


def _floats(text):
    return [float(v) for v in _split(text)]


def _split(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    return [v.strip() for v in str(text).replace(";", ",").split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ExperimentSection:
    id: str = ""
    repetitions: int = 20
    base_seed: int = 0
    threads: int = 1
    out: str = ""


@dataclass
class DataSection:
    source: str = "synthetic"  # synthetic | csv | blobs
    n: int = 2000
    n_test: int = 1000
    J: int = 0  # 0: max(200, 10 sqrt(n_max))
    b: float = 0.5
    r: float = 0.5
    R: float = 1.0
    noise_sigma: float = 0.5
    coef_decay: float = 0.5
    model_seed: int = 0
    path: str = ""
    label_column: str = "-1"
    limit: int = 0
    class_mapping: str = ""
    train_fraction: float = 0.5
    standardize: bool = True
    d: int = 14
    separation: float = 2.0


@dataclass
class FeaturesSection:
    kind: str = "model-fourier"  # model-fourier | gaussian-rff | ntk
    bandwidth: float = 1.0
    tau: float = 1.0
    gamma: float = 1.0
    activation: str = "sigmoid"
    input_radius: float = 1.0


@dataclass
class FilterSection:
    method: str = "landweber"
    alpha: str = "kappa"  # kappa: 0.5 / kappa^2 | spectral: 1 / (1.05 lambda_max) | a number
    beta: float = 0.0
    schedule: str = "constant"
    nu: float = 2.0


@dataclass
class GridSection:
    M_list: list = field(default_factory=list)  # empty: ceil(c sqrt(n) d) for c in M_factors
    M_factors: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    T_list: list = field(default_factory=lambda: [2**i for i in range(11)])
    n_list: list = field(default_factory=lambda: [512, 1024, 2048, 4096, 8192])


@dataclass
class TheorySection:
    C_lambda: float = 1.0
    C_M: float = 1.0


@dataclass
class VerifySection:
    t_points: int = 1000
    lambda_points: int = 1000
    lambda_min: float = 1e-3
    q_list: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 4.0])
    landweber_alpha: float = 0.5
    heavy_ball_beta: float = 0.5
    heavy_ball_k_max: int = 64
    instances: int = 5
    eq_n: int = 40
    eq_M: int = 20
    eq_k: int = 60


@dataclass
class ExperimentConfig:
    kind: str = "sweep"
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    data: DataSection = field(default_factory=DataSection)
    features: FeaturesSection = field(default_factory=FeaturesSection)
    filter: FilterSection = field(default_factory=FilterSection)
    grid: GridSection = field(default_factory=GridSection)
    theory: TheorySection = field(default_factory=TheorySection)
    verify: VerifySection = field(default_factory=VerifySection)

    @property
    def experiment_id(self) -> str:
        return self.experiment.id or self.kind

    @property
    def out_path(self) -> Path:
        return Path(self.experiment.out or f"rfs_{self.kind}.csv")

    def model_J(self) -> int:
        if self.data.J > 0:
            return self.data.J
        n_max = max(self.grid.n_list) if self.kind == "rates" else self.data.n
        return max(200, math.ceil(10 * math.sqrt(n_max)))


SECTIONS = ("experiment", "data", "features", "filter", "grid", "theory", "verify")

_LIST_PARSERS = {
    ("grid", "M_list"): _ints,
    ("grid", "M_factors"): _floats,
    ("grid", "T_list"): _ints,
    ("grid", "n_list"): _ints,
    ("verify", "q_list"): _floats,
}


def _coerce(section: str, f: dataclasses.Field, raw):
    key = (section, f.name)
    try:
        if key in _LIST_PARSERS:
            return _LIST_PARSERS[key](raw)
        typ = f.type if isinstance(f.type, str) else f.type.__name__
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            return _bool(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {f.name}: {exc}") from None


def option_table():
    """``(section, field)`` pairs for every configurable key."""
    cfg = ExperimentConfig()
    return [(name, f) for name in SECTIONS for f in fields(getattr(cfg, name))]


def load_config(path=None, kind: str = "sweep", overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional file and ``{"section.key": raw}`` overrides."""
    cfg = ExperimentConfig(kind=kind)
    known = {name: {f.name: f for f in fields(getattr(cfg, name))} for name in SECTIONS}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str  # keys are case sensitive (M_list, C_lambda)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in known[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                setattr(getattr(cfg, section), key, _coerce(section, known[section][key], raw))
    for dotted, raw in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in known or key not in known[section]:
            raise ConfigError(f"unknown option {dotted!r}")
        setattr(getattr(cfg, section), key, _coerce(section, known[section][key], raw))
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    e, d, f, g = cfg.experiment, cfg.data, cfg.features, cfg.filter
    if cfg.kind not in ("sweep", "rates", "verify"):
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    if e.repetitions < 1:
        raise ConfigError("repetitions must be at least 1")
    if e.threads < 1:
        raise ConfigError("threads must be at least 1")
    if d.source not in ("synthetic", "csv", "blobs"):
        raise ConfigError(f"unknown data source {d.source!r}")
    if d.source == "csv" and not d.path:
        raise ConfigError("csv data source needs [data] path")
    if f.kind not in ("model-fourier", "gaussian-rff", "ntk"):
        raise ConfigError(f"unknown feature kind {f.kind!r}")
    if f.kind == "model-fourier" and d.source != "synthetic":
        raise ConfigError("model-fourier features need the synthetic data source")
    if g.method not in ("tikhonov", "landweber", "heavy-ball", "nesterov"):
        raise ConfigError(f"unknown filter method {g.method!r}")
    if g.alpha not in ("kappa", "spectral"):
        try:
            if not float(g.alpha) > 0:
                raise ValueError
        except ValueError:
            raise ConfigError(f"[filter] alpha must be 'kappa', 'spectral' or a positive number, got {g.alpha!r}") from None
    if g.schedule not in ("constant", "nu"):
        raise ConfigError(f"unknown heavy-ball schedule {g.schedule!r}")
    if not 0 <= g.beta < 1:
        raise ConfigError("[filter] beta must lie in [0, 1)")
    if cfg.kind == "sweep":
        if not cfg.grid.T_list or any(t < 1 for t in cfg.grid.T_list):
            raise ConfigError("T_list must be nonempty positive integers")
        if not cfg.grid.M_list and not cfg.grid.M_factors:
            raise ConfigError("M grid is empty")
        if any(m < 1 for m in cfg.grid.M_list):
            raise ConfigError("M_list entries must be positive")
    if cfg.kind == "rates":
        if d.source != "synthetic" or f.kind != "model-fourier":
            raise ConfigError("rates need synthetic data with model-fourier features (analytic error)")
        ns = sorted(cfg.grid.n_list)
        if len(ns) < 4 or ns[-1] < 10 * ns[0]:
            raise ConfigError("n_list needs at least 4 points spanning at least one decade")


def cell_seed(base_seed: int, rep: int, M: int, T: int, n: int) -> int:
    """Stable 64-bit seed of a grid cell, independent of execution order."""
    payload = struct.pack("<5q", int(base_seed), int(rep), int(M), int(T), int(n))
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
