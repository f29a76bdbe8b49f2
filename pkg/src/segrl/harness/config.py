"""Run configuration: one flat record mirroring the CLI flags.

The effective config (see `effective_config`) covers every field that can
change the trained result.  Output locations are deliberately excluded:
two runs that differ only in where they write files are the same
experiment.  Paired A/B runs are validated by diffing effective configs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from ..pipeline import PipelineConfig
from ..ppo import PpoHyper


@dataclass
class RunConfig:
    env_id: str = "MiniCatch-v0"
    seed: int = 47
    # optimization
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
    # observation pipeline
    frameskip: int = 4
    stack: int = 4
    clip_rewards: bool = True
    segmenter: str = "none"  # none | builtin | remote
    seg_mode: str = "replace"  # replace | overlay
    seg_alpha: float = 1.0
    seg_bits: int = 3
    seg_min_area: int = 4
    seg_endpoint: Optional[str] = None
    seg_timeout_ms: int = 10000
    # outputs (not part of the effective config)
    out_dir: str = "runs"
    metrics_out: Optional[str] = None
    frames_out: Optional[str] = None
    weights_out: Optional[str] = None
    frames_interval: int = 100

    def validate(self) -> "RunConfig":
        if self.num_envs != 1:
            raise ValueError("only num_envs=1 is supported")
        if self.total_timesteps <= 0:
            raise ValueError(f"total_timesteps must be > 0, got {self.total_timesteps}")
        if self.frames_interval <= 0:
            raise ValueError(f"frames_interval must be > 0, got {self.frames_interval}")
        self.hyper().validate()
        self.pipeline_config().validate()
        return self

    def hyper(self) -> PpoHyper:
        return PpoHyper(
            clip_coef=self.clip_coef,
            learning_rate=self.learning_rate,
            gamma=self.gamma,
            gae_lambda=self.gae_lambda,
            update_epochs=self.update_epochs,
            num_minibatches=self.num_minibatches,
            num_steps=self.num_steps,
            total_timesteps=self.total_timesteps,
            vf_coef=self.vf_coef,
            ent_coef=self.ent_coef,
            max_grad_norm=self.max_grad_norm,
            norm_adv=self.norm_adv,
            clip_vloss=self.clip_vloss,
            anneal_lr=self.anneal_lr,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            frameskip=self.frameskip,
            segmenter=self.segmenter,
            seg_mode=self.seg_mode,
            seg_alpha=self.seg_alpha,
            seg_bits=self.seg_bits,
            seg_min_area=self.seg_min_area,
            seg_endpoint=self.seg_endpoint,
            seg_timeout_ms=self.seg_timeout_ms,
            stack=self.stack,
            clip_rewards=self.clip_rewards,
        )


_OUTPUT_FIELDS = ("out_dir", "metrics_out", "frames_out", "weights_out", "frames_interval")


def effective_config(config: RunConfig) -> dict:
    """Every behavioral field, name -> value. Output paths excluded."""
    return {
        f.name: getattr(config, f.name)
        for f in fields(RunConfig)
        if f.name not in _OUTPUT_FIELDS
    }


def config_diff(a: RunConfig, b: RunConfig) -> list[str]:
    """Names of effective-config fields where the two runs disagree."""
    ca, cb = effective_config(a), effective_config(b)
    return sorted(k for k in ca if ca[k] != cb[k])
