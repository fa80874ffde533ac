"""Deterministic experiment harness: configs, runners, protocols, CSV output."""

from .config import ExperimentConfig, load_config, parse_grid
from .runner import (
    EnsembleStats,
    RunTrace,
    TraceRow,
    geometric_checkpoints,
    percentile,
    run_scalar_ensemble,
    run_trajectory,
)

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_grid",
    "RunTrace",
    "TraceRow",
    "EnsembleStats",
    "geometric_checkpoints",
    "percentile",
    "run_scalar_ensemble",
    "run_trajectory",
]
