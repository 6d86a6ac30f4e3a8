"""Experiment configuration, execution and reporting."""
from __future__ import annotations

from .config import ExperimentConfig, load_config, parse_config
from .experiments import EXPERIMENTS
from .report import ReportSummary, summarize
from .runner import TrialRecord, read_records, resolve_threads, run_experiment, trial_seed

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ReportSummary",
    "TrialRecord",
    "load_config",
    "parse_config",
    "read_records",
    "resolve_threads",
    "run_experiment",
    "summarize",
    "trial_seed",
]
