"""Benchmark driver: validation gates, solves, sweeps, probes, robustness."""

from .reports import dumps_report, numeric_payload
from .runner import (cmd_probe, cmd_robustness, cmd_solve, cmd_sweep,
                     cmd_validate, run_experiment)
from .specs import ExperimentSpec, load_config

__all__ = [
    "ExperimentSpec", "cmd_probe", "cmd_robustness", "cmd_solve", "cmd_sweep",
    "cmd_validate", "dumps_report", "load_config", "numeric_payload",
    "run_experiment",
]
