"""Experiment harness: configuration, sweep and rate runners, verification suite."""

from .config import ConfigError, ExperimentConfig, cell_seed, load_config
from .runner import RunResult, run_rates, run_sweep
from .verify import VerifyResult, run_verify

__all__ = ["ConfigError", "ExperimentConfig", "RunResult", "VerifyResult", "cell_seed", "load_config",
           "run_rates", "run_sweep", "run_verify"]
