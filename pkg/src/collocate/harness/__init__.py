"""Experiment harness behind the command line."""

from .base import CommandRegistry
from .config import Configuration, CraneInstance, ExperimentConfig, InstanceBox, default_configurations
from .experiments import ExperimentHarness, geometric_mean, run_crane_batch, sample_instances, solve_crane
from .records import BENCH_HEADER, CONVERGENCE_HEADER, CRANE_HEADER, BenchPoint, CraneRecord, read_csv
from .result import EXIT_ACCEPTANCE, EXIT_OK, EXIT_USAGE, CommandResult

__all__ = [
    "CommandRegistry",
    "CommandResult",
    "ExperimentHarness",
    "ExperimentConfig",
    "Configuration",
    "CraneInstance",
    "InstanceBox",
    "default_configurations",
    "sample_instances",
    "solve_crane",
    "run_crane_batch",
    "geometric_mean",
    "CraneRecord",
    "BenchPoint",
    "read_csv",
    "CONVERGENCE_HEADER",
    "CRANE_HEADER",
    "BENCH_HEADER",
    "EXIT_OK",
    "EXIT_ACCEPTANCE",
    "EXIT_USAGE",
]
