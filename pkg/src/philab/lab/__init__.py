"""Experiment configs, drivers and the ``philab`` command."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import ExperimentResult, Verdict, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "ExperimentResult", "Verdict", "run_experiment"]
