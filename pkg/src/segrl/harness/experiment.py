"""Paired raw-vs-segmented experiment on one environment."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..envs import make
from .config import RunConfig, config_diff
from .report import ImprovementReport, format_report_csv, format_report_table, improvement_report
from .train import BaselineResult, TrainResult, run_training


@dataclass
class ExperimentResult:
    report: ImprovementReport  # single-row report for this env
    raw: TrainResult
    seg: TrainResult
    diff: list  # config fields differing between the arms
    objects: str  # taxonomy object-count tag of the env


def _no_learning(result: TrainResult, baseline: Optional[BaselineResult]) -> bool:
    if result.episodes == 0:
        return True
    if baseline is None:
        return False
    return abs(result.ema_end - baseline.ema_end) <= baseline.ema_std


def run_experiment(
    config: RunConfig,
    baseline: Optional[BaselineResult] = None,
    progress=None,
) -> ExperimentResult:
    """Train twice, identical except for the segmentation stage.

    The raw arm forces segmenter=none; the segmented arm uses the config's
    segmenter (builtin when the config says none).  Purity is enforced by
    diffing effective configs: anything besides the segmenter field
    differing is a bug worth crashing on.  Writes raw_/seg_ prefixed
    metrics and weights plus report.csv / report.txt under out_dir.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    seg_kind = config.segmenter if config.segmenter != "none" else "builtin"
    arms = {}
    for tag, kind in (("raw", "none"), ("seg", seg_kind)):
        arms[tag] = replace(
            config,
            segmenter=kind,
            metrics_out=str(out_dir / f"{tag}_metrics.csv"),
            weights_out=str(out_dir / f"{tag}_weights.npz"),
            frames_out=str(Path(config.frames_out) / tag) if config.frames_out else None,
        )
    diff = config_diff(arms["raw"], arms["seg"])
    if diff != ["segmenter"]:
        raise RuntimeError(f"paired runs must differ only in segmenter, got {diff}")

    def tagged(tag):
        if progress is None:
            return None
        return lambda *args: progress(tag, *args)

    raw_result = run_training(arms["raw"], progress=tagged("raw"))
    seg_result = run_training(arms["seg"], progress=tagged("seg"))

    objects = make(config.env_id).object_count
    no_learning = _no_learning(raw_result, baseline) or _no_learning(seg_result, baseline)
    report = improvement_report(
        [
            (
                config.env_id,
                raw_result.ema_end if raw_result.ema_end is not None else 0.0,
                seg_result.ema_end if seg_result.ema_end is not None else 0.0,
                no_learning,
                objects,
            )
        ]
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(format_report_csv(report))
    (out_dir / "report.txt").write_text(format_report_table(report))
    return ExperimentResult(
        report=report, raw=raw_result, seg=seg_result, diff=diff, objects=objects
    )
