"""Observation wrapper stack.

Raw 210x160 RGB frames pass through, in order:

    frameskip (repeat action, sum rewards, max-pool last two native frames)
    optional segmentation recolor     <- on the raw RGB frame
    grayscale
    area-average downscale to 84x84
    4-frame FIFO stack, scaled to [0, 1]

Segmentation runs once per aggregated frame (not per native frame); that is
the whole point of frame skipping when the segmenter is expensive.  Bytes
are produced with round-half-away-from-zero everywhere so stored golden
tensors are portable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .envs.base import Env, StepResult
from .segmenter import SegmenterConfig, render, segment_frame

__all__ = [
    "PipelineConfig",
    "PipelineEnv",
    "build_pipeline",
    "grayscale",
    "downscale",
    "clip_reward",
    "frame_skip_step",
]


@dataclass
class PipelineConfig:
    frameskip: int = 4
    segmenter: str = "none"  # "none", "builtin", "remote"
    seg_mode: str = "replace"  # "replace" or "overlay"
    seg_alpha: float = 1.0
    seg_bits: int = 3
    seg_min_area: int = 4
    seg_endpoint: Optional[str] = None  # host:port, remote only
    seg_timeout_ms: int = 10000
    stack: int = 4
    clip_rewards: bool = True

    def validate(self) -> "PipelineConfig":
        if self.frameskip < 1:
            raise ValueError(f"frameskip must be >= 1, got {self.frameskip}")
        if self.stack < 1:
            raise ValueError(f"stack must be >= 1, got {self.stack}")
        if self.segmenter not in ("none", "builtin", "remote"):
            raise ValueError(
                f"segmenter must be none|builtin|remote, got {self.segmenter!r}"
            )
        self.seg_config().validate()
        if self.segmenter == "remote" and not self.seg_endpoint:
            raise ValueError("segmenter=remote requires an endpoint (host:port)")
        return self

    def seg_config(self) -> SegmenterConfig:
        return SegmenterConfig(
            bits=self.seg_bits,
            min_area=self.seg_min_area,
            mode=self.seg_mode,
            alpha=self.seg_alpha,
        )


GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def _round_half_up(x: np.ndarray) -> np.ndarray:
    # inputs are non-negative, so half-up equals half-away-from-zero
    return np.floor(x + 0.5)


def grayscale(frame: np.ndarray) -> np.ndarray:
    """RGB bytes -> luma bytes, y = round(0.299 R + 0.587 G + 0.114 B)."""
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 frame, got shape {frame.shape}")
    y = (
        GRAY_WEIGHTS[0] * frame[:, :, 0].astype(np.float64)
        + GRAY_WEIGHTS[1] * frame[:, :, 1]
        + GRAY_WEIGHTS[2] * frame[:, :, 2]
    )
    return np.clip(_round_half_up(y), 0, 255).astype(np.uint8)


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) matrix of interval-overlap weights."""
    scale = n_in / n_out
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for o in range(n_out):
        lo = o * scale
        hi = (o + 1) * scale
        for i in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            w[o, i] = max(0.0, min(hi, i + 1) - max(lo, i))
    return w / w.sum(axis=1, keepdims=True)


_ROWS_210_84 = _area_weights(210, 84)
_COLS_160_84 = _area_weights(160, 84).T


def downscale(gray: np.ndarray) -> np.ndarray:
    """Area-average 210x160 -> 84x84; constant inputs stay constant."""
    if gray.shape != (210, 160):
        raise ValueError(f"expected a 210x160 grid, got shape {gray.shape}")
    out = _ROWS_210_84 @ gray.astype(np.float64) @ _COLS_160_84
    return np.clip(_round_half_up(out), 0, 255).astype(np.uint8)


def clip_reward(r: float) -> float:
    return float(np.sign(r))


def frame_skip_step(env: Env, action: int, k: int) -> StepResult:
    """Repeat one action k native frames; pool the last two frames.

    Reward is the sum over executed frames; termination cuts the repeat
    short.  The returned frame is the pixelwise max of the last two native
    frames (or the single frame when only one ran).
    """
    if k < 1:
        raise ValueError(f"frameskip must be >= 1, got {k}")
    total = 0.0
    terminated = truncated = False
    prev = last = None
    for _ in range(k):
        res = env.step(action)
        total += res.reward
        prev, last = last, res.frame
        terminated = terminated or res.terminated
        truncated = truncated or res.truncated
        if terminated or truncated:
            break
    frame = last if prev is None else np.maximum(prev, last)
    return StepResult(frame, total, terminated, truncated)


@dataclass
class PipelineStep:
    obs: np.ndarray  # float32, (stack, 84, 84), values in [0, 1]
    reward: float  # training reward (clipped when configured)
    raw_reward: float  # aggregated env reward before clipping
    terminated: bool
    truncated: bool


class PipelineEnv:
    """An Env wrapped with the full preprocessing stack."""

    def __init__(self, env: Env, config: PipelineConfig, seg_fn: Optional[Callable] = None):
        self.env = env
        self.config = config.validate()
        self._seg_fn = seg_fn
        self._frames: deque = deque(maxlen=config.stack)
        self.action_count = env.action_count
        self.env_id = env.env_id
        # called with each aggregated RGB frame after segmentation, before
        # grayscale; the harness uses it for frame dumps
        self.frame_hook: Optional[Callable] = None

    def _process(self, frame: np.ndarray) -> np.ndarray:
        if self._seg_fn is not None:
            frame = self._seg_fn(frame)
        if self.frame_hook is not None:
            self.frame_hook(frame)
        return downscale(grayscale(frame))

    def _tensor(self) -> np.ndarray:
        return (np.stack(self._frames).astype(np.float32)) / np.float32(255.0)

    def reset(self, seed: int) -> np.ndarray:
        frame = self.env.reset(seed)
        first = self._process(frame)
        self._frames.clear()
        for _ in range(self.config.stack):
            self._frames.append(first)
        return self._tensor()

    def step(self, action: int) -> PipelineStep:
        res = frame_skip_step(self.env, action, self.config.frameskip)
        self._frames.append(self._process(res.frame))
        reward = clip_reward(res.reward) if self.config.clip_rewards else res.reward
        return PipelineStep(self._tensor(), reward, res.reward, res.terminated, res.truncated)


def build_pipeline(env: Env, config: PipelineConfig, client_factory=None) -> PipelineEnv:
    """Wrap an env per config. Remote segmentation connects now (fail fast).

    client_factory(endpoint, timeout_ms) -> object with segment(frame) ->
    SegmentLabelMap; defaults to the bundled socket client.
    """
    config.validate()
    if config.segmenter == "none":
        return PipelineEnv(env, config, None)
    if config.segmenter == "builtin":
        seg_cfg = config.seg_config()
        return PipelineEnv(env, config, lambda f: segment_frame(f, seg_cfg))
    if client_factory is None:
        from .remote import SegClient, SegClientConfig

        client_factory = lambda ep, ms: SegClient(SegClientConfig(ep, ms))  # noqa: E731
    client = client_factory(config.seg_endpoint, config.seg_timeout_ms)
    client.connect()
    mode, alpha = config.seg_mode, config.seg_alpha

    def remote_seg(frame):
        return render(client.segment(frame), frame, mode, alpha)

    pipe = PipelineEnv(env, config, remote_seg)
    pipe.seg_client = client  # so callers can close it
    return pipe
