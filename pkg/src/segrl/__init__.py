"""Segmentation-augmented pixel RL: envs, pipeline, PPO, service, CLI."""

__version__ = "0.1.0"
