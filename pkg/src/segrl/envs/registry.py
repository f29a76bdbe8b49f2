from __future__ import annotations

from .base import Env
from .minibricks import MiniBricks
from .minicatch import MiniCatch

ENV_IDS = ("MiniCatch-v0", "MiniCatch8-v0", "MiniBricks-v0")


def make(env_id: str) -> Env:
    if env_id == "MiniCatch-v0":
        return MiniCatch(balls=1)
    if env_id == "MiniCatch8-v0":
        return MiniCatch(balls=8)
    if env_id == "MiniBricks-v0":
        return MiniBricks()
    raise KeyError(f"unknown env id {env_id!r}; known: {list(ENV_IDS)}")
