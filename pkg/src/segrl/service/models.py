"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..harness import RunConfig


class TrainRequest(BaseModel):
    """Mirror of the run configuration; same fields, same defaults."""

    env_id: str = "MiniCatch-v0"
    seed: int = 47
    clip_coef: float = 0.25
    learning_rate: float = 2.5e-3
    num_envs: int = 1
    num_minibatches: int = 8
    num_steps: int = 128
    update_epochs: int = 2
    total_timesteps: int = 20000
    gamma: float = 0.99
    gae_lambda: float = 0.95
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    norm_adv: bool = True
    clip_vloss: bool = True
    anneal_lr: bool = True
    frameskip: int = 4
    stack: int = 4
    clip_rewards: bool = True
    segmenter: Literal["none", "builtin", "remote"] = "none"
    seg_mode: Literal["replace", "overlay"] = "replace"
    seg_alpha: float = 1.0
    seg_bits: int = 3
    seg_min_area: int = 4
    seg_endpoint: Optional[str] = None
    seg_timeout_ms: int = 10000
    out_dir: str = "runs"
    metrics_out: Optional[str] = None
    frames_out: Optional[str] = None
    weights_out: Optional[str] = None
    frames_interval: int = 100

    def to_config(self) -> RunConfig:
        return RunConfig(**self.model_dump())


class ExperimentRequest(TrainRequest):
    baseline_episodes: int = Field(
        default=100, ge=0, description="random-policy episodes for the no-learning check"
    )

    def to_config(self) -> RunConfig:
        return RunConfig(**self.model_dump(exclude={"baseline_episodes"}))


class JobSubmitted(BaseModel):
    job_id: str


class JobInfo(BaseModel):
    job_id: str
    kind: str
    state: Literal["queued", "running", "done", "error"]
    created: float
    started: Optional[float] = None
    finished: Optional[float] = None
    error: Optional[str] = None
    progress: Optional[dict] = None
    result: Optional[dict] = None


class TrainSummary(BaseModel):
    episodes: int
    ema_end: Optional[float]
    sps: float
    elapsed_seconds: float
    metrics_path: str
    weights_path: str
    config: dict


class ReportRowModel(BaseModel):
    game: str
    raw_score: float
    seg_score: float
    percent: Optional[float]
    note: str = ""
    objects: str = ""


class ExperimentSummary(BaseModel):
    rows: list[ReportRowModel]
    raw: TrainSummary
    seg: TrainSummary
    diff: list[str]
    objects: str
    report_table: str
    report_csv: str


class BaselineRequest(BaseModel):
    env_id: str = "MiniCatch-v0"
    episodes: int = Field(default=100, gt=0)
    seed: int = 47


class BaselineSummary(BaseModel):
    env_id: str
    episodes: int
    mean: float
    std: float
    ema_end: float
    ema_std: float


class EnvInfo(BaseModel):
    env_id: str
    action_count: int
    object_count: str


class TaxonomyModel(BaseModel):
    game_id: str
    exploration: str
    reward: str
    objects: str


class SegmentRequest(BaseModel):
    """One RGB frame as base64 row-major bytes."""

    width: int = Field(gt=0)
    height: int = Field(gt=0)
    pixels_b64: str
    bits: int = Field(default=3, ge=1, le=8)
    min_area: int = Field(default=4, ge=1)


class SegmentResponse(BaseModel):
    width: int
    height: int
    count: int
    labels_b64: str  # big-endian uint32 per pixel, row-major


class HealthResponse(BaseModel):
    status: str
    version: str
