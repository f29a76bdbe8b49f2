"""Environment step contract: 210x160 RGB frames, scalar rewards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FRAME_HEIGHT = 210
FRAME_WIDTH = 160
FRAME_SHAPE = (FRAME_HEIGHT, FRAME_WIDTH, 3)


@dataclass
class StepResult:
    frame: np.ndarray  # uint8, (210, 160, 3), channel order R,G,B
    reward: float
    terminated: bool
    truncated: bool


class EpisodeOver(RuntimeError):
    """step() was called after the episode terminated."""


class Env:
    """Deterministic pixel environment.

    State after reset(seed) is a pure function of the seed; (seed, action
    sequence) determines every frame and reward bit-for-bit.  One instance
    is single-threaded.
    """

    env_id: str = ""
    action_count: int = 0
    object_count: str = "low"  # on-screen object density: "low" or "high"

    def reset(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: int) -> StepResult:
        raise NotImplementedError


def blank_frame() -> np.ndarray:
    return np.zeros(FRAME_SHAPE, dtype=np.uint8)
