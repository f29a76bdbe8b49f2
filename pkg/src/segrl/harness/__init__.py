"""Experiment harness: run configs, training loop, metrics, reports."""

from .config import RunConfig, config_diff, effective_config
from .metrics import (
    CSV_HEADER,
    MetricsLog,
    MetricsRow,
    dump_frame,
    ema_smooth,
    read_metrics,
    read_ppm,
)
from .report import (
    ImprovementReport,
    ImprovementRow,
    format_report_csv,
    format_report_table,
    improvement_report,
    round_half_away,
)
from .train import BaselineResult, TrainResult, random_baseline, run_training
from .experiment import ExperimentResult, run_experiment

__all__ = [
    "RunConfig",
    "config_diff",
    "effective_config",
    "CSV_HEADER",
    "MetricsLog",
    "MetricsRow",
    "read_metrics",
    "ema_smooth",
    "dump_frame",
    "read_ppm",
    "ImprovementReport",
    "ImprovementRow",
    "improvement_report",
    "format_report_csv",
    "format_report_table",
    "round_half_away",
    "TrainResult",
    "BaselineResult",
    "run_training",
    "random_baseline",
    "ExperimentResult",
    "run_experiment",
]
