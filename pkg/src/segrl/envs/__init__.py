from .base import Env, StepResult
from .registry import ENV_IDS, make

__all__ = ["Env", "StepResult", "make", "ENV_IDS"]
