"""HTTP facade over the experiment harness.

Long work (training, experiments, baselines) runs as background jobs;
segmentation and registry lookups answer inline.
"""

from __future__ import annotations

import base64
import binascii

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..envs import ENV_IDS, make
from ..envs.taxonomy import TAXONOMY, taxonomy_lookup
from ..harness import (
    RunConfig,
    format_report_csv,
    format_report_table,
    random_baseline,
    run_experiment,
    run_training,
)
from ..segmenter import SegmenterConfig, segment_labels
from .jobs import Job, JobRunner
from .models import (
    BaselineRequest,
    EnvInfo,
    ExperimentRequest,
    ExperimentSummary,
    HealthResponse,
    JobInfo,
    JobSubmitted,
    ReportRowModel,
    SegmentRequest,
    SegmentResponse,
    TaxonomyModel,
    TrainRequest,
    TrainSummary,
)


def _check_config(config: RunConfig) -> None:
    try:
        make(config.env_id)
        config.validate()
    except (KeyError, ValueError) as e:
        raise HTTPException(status_code=422, detail=str(e))


def _train_summary(result) -> TrainSummary:
    return TrainSummary(
        episodes=result.episodes,
        ema_end=result.ema_end,
        sps=result.sps,
        elapsed_seconds=result.elapsed_seconds,
        metrics_path=str(result.metrics_path),
        weights_path=str(result.weights_path),
        config=result.config,
    )


def _job_info(job: Job) -> JobInfo:
    return JobInfo(
        job_id=job.job_id,
        kind=job.kind,
        state=job.state,
        created=job.created,
        started=job.started,
        finished=job.finished,
        error=job.error,
        progress=job.progress,
        result=job.result,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="segrl", version=__version__)
    runner = JobRunner()
    app.state.jobs = runner

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/envs", response_model=list[EnvInfo])
    def envs():
        out = []
        for env_id in ENV_IDS:
            env = make(env_id)
            out.append(
                EnvInfo(
                    env_id=env_id,
                    action_count=env.action_count,
                    object_count=env.object_count,
                )
            )
        return out

    @app.get("/taxonomy", response_model=list[TaxonomyModel])
    def taxonomy():
        return [TaxonomyModel(**vars(e)) for e in TAXONOMY.values()]

    @app.get("/taxonomy/{game}", response_model=TaxonomyModel)
    def taxonomy_game(game: str):
        try:
            return TaxonomyModel(**vars(taxonomy_lookup(game)))
        except KeyError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.post("/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest):
        try:
            raw = base64.b64decode(req.pixels_b64, validate=True)
        except binascii.Error:
            raise HTTPException(status_code=422, detail="pixels_b64 is not valid base64")
        if len(raw) != 3 * req.width * req.height:
            raise HTTPException(
                status_code=422,
                detail=f"expected {3 * req.width * req.height} pixel bytes, got {len(raw)}",
            )
        frame = np.frombuffer(raw, dtype=np.uint8).reshape(req.height, req.width, 3)
        seg = segment_labels(frame, SegmenterConfig(bits=req.bits, min_area=req.min_area))
        return SegmentResponse(
            width=seg.width,
            height=seg.height,
            count=seg.count,
            labels_b64=base64.b64encode(seg.labels.astype(">u4").tobytes()).decode(),
        )

    @app.post("/runs", response_model=JobSubmitted, status_code=202)
    def submit_run(req: TrainRequest):
        config = req.to_config()
        _check_config(config)

        def work(job: Job) -> dict:
            def progress(update, num_updates, step, sps):
                job.progress = {
                    "update": update,
                    "num_updates": num_updates,
                    "global_step": step,
                    "sps": sps,
                }

            return _train_summary(run_training(config, progress=progress)).model_dump()

        return JobSubmitted(job_id=runner.submit("train", work).job_id)

    @app.post("/experiments", response_model=JobSubmitted, status_code=202)
    def submit_experiment(req: ExperimentRequest):
        config = req.to_config()
        _check_config(config)
        episodes = req.baseline_episodes

        def work(job: Job) -> dict:
            baseline = None
            if episodes > 0:
                job.progress = {"phase": "baseline", "episodes": episodes}
                baseline = random_baseline(config.env_id, episodes=episodes, seed=config.seed)

            def progress(arm, update, num_updates, step, sps):
                job.progress = {
                    "phase": arm,
                    "update": update,
                    "num_updates": num_updates,
                    "global_step": step,
                    "sps": sps,
                }

            result = run_experiment(config, baseline=baseline, progress=progress)
            rows = [
                ReportRowModel(
                    game=r.game,
                    raw_score=r.raw_score,
                    seg_score=r.seg_score,
                    percent=r.percent,
                    note=r.note,
                    objects=r.objects,
                )
                for r in result.report.rows
            ]
            return ExperimentSummary(
                rows=rows,
                raw=_train_summary(result.raw),
                seg=_train_summary(result.seg),
                diff=result.diff,
                objects=result.objects,
                report_table=format_report_table(result.report),
                report_csv=format_report_csv(result.report),
            ).model_dump()

        return JobSubmitted(job_id=runner.submit("experiment", work).job_id)

    @app.post("/baseline", response_model=JobSubmitted, status_code=202)
    def submit_baseline(req: BaselineRequest):
        try:
            make(req.env_id)
        except KeyError as e:
            raise HTTPException(status_code=422, detail=str(e))

        def work(job: Job) -> dict:
            res = random_baseline(req.env_id, episodes=req.episodes, seed=req.seed)
            return {
                "env_id": res.env_id,
                "episodes": res.episodes,
                "mean": res.mean,
                "std": res.std,
                "ema_end": res.ema_end,
                "ema_std": res.ema_std,
            }

        return JobSubmitted(job_id=runner.submit("baseline", work).job_id)

    @app.get("/jobs", response_model=list[JobInfo])
    def jobs():
        return [_job_info(j) for j in runner.list()]

    @app.get("/jobs/{job_id}", response_model=JobInfo)
    def job(job_id: str):
        j = runner.get(job_id)
        if j is None:
            raise HTTPException(status_code=404, detail=f"no such job {job_id!r}")
        return _job_info(j)

    return app
