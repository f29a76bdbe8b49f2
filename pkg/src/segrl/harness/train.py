"""The training loop: collect, estimate advantages, update, log."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..envs import make
from ..nn import AdamState, PolicyValueNet
from ..pipeline import build_pipeline, frame_skip_step
from ..ppo import EnvSession, collect_rollout, compute_gae, ppo_update
from .config import RunConfig, effective_config
from .metrics import MetricsLog, MetricsRow, dump_frame, ema_smooth


@dataclass
class TrainResult:
    config: dict  # effective config of the run
    metrics: MetricsLog
    metrics_path: str
    weights_path: str
    episode_returns: list
    episodes: int
    ema_end: Optional[float]  # None when no episode completed
    elapsed_seconds: float
    sps: float


def run_training(config: RunConfig, progress=None) -> TrainResult:
    """Run one training to completion; flush a partial log on any error.

    Emits one metrics row per completed episode and one per update; an
    episode that ends exactly on an update boundary shares the update's
    row.  progress(update, num_updates, global_step, sps) is called after
    each update when given.
    """
    config.validate()
    hyper = config.hyper()
    out_dir = Path(config.out_dir)
    metrics_path = Path(config.metrics_out) if config.metrics_out else out_dir / "metrics.csv"
    weights_path = Path(config.weights_out) if config.weights_out else out_dir / "weights.npz"

    env = make(config.env_id)
    pipe = build_pipeline(env, config.pipeline_config())
    if config.frames_out:
        frames_dir = Path(config.frames_out)
        frames_dir.mkdir(parents=True, exist_ok=True)
        counter = {"n": 0}

        def hook(frame):
            if counter["n"] % config.frames_interval == 0:
                dump_frame(frame, frames_dir / f"frame_{counter['n']:08d}.ppm")
            counter["n"] += 1

        pipe.frame_hook = hook

    # one RNG stream, consumed in a fixed order: net init, then per update
    # the rollout's action samples, then the epoch shuffles
    rng = np.random.default_rng(config.seed)
    net = PolicyValueNet(env.action_count, rng=rng)
    adam = AdamState.init(net.params)
    session = EnvSession(pipe, base_seed=config.seed)
    log = MetricsLog()
    episode_returns: list[float] = []
    num_updates = hyper.total_timesteps // hyper.num_steps
    start = time.monotonic()

    try:
        for update in range(1, num_updates + 1):
            lr = None
            if hyper.anneal_lr:
                lr = hyper.learning_rate * (1.0 - (update - 1) / num_updates)
            buf = collect_rollout(session, net, hyper.num_steps, rng)
            buf.advantages, buf.returns = compute_gae(
                buf.rewards, buf.values, buf.dones, buf.bootstrap_value,
                hyper.gamma, hyper.gae_lambda,
            )
            stats = ppo_update(net, adam, buf, hyper, rng, lr=lr)

            step = update * hyper.num_steps
            sps = step / max(time.monotonic() - start, 1e-9)
            boundary_episode = {}
            for ep_step, ep_return, ep_len in session.drain_completed():
                episode_returns.append(ep_return)
                if ep_step == step:
                    boundary_episode = {
                        "episodic_return": ep_return,
                        "episodic_length": ep_len,
                    }
                else:
                    log.append(MetricsRow(ep_step, ep_return, ep_len, sps))
            log.append(
                MetricsRow(
                    global_step=step,
                    sps=sps,
                    policy_loss=stats.policy_loss,
                    value_loss=stats.value_loss,
                    entropy=stats.entropy,
                    approx_kl=stats.approx_kl,
                    clipfrac=stats.clipfrac,
                    **boundary_episode,
                )
            )
            if progress is not None:
                progress(update, num_updates, step, sps)
    except BaseException:
        log.write(metrics_path)  # keep the partial log for postmortems
        raise
    finally:
        client = getattr(pipe, "seg_client", None)
        if client is not None:
            client.close()

    elapsed = time.monotonic() - start
    log.write(metrics_path)
    net.save(weights_path)
    ema_end = float(ema_smooth(episode_returns)[-1]) if episode_returns else None
    return TrainResult(
        config=effective_config(config),
        metrics=log,
        metrics_path=str(metrics_path),
        weights_path=str(weights_path),
        episode_returns=episode_returns,
        episodes=len(episode_returns),
        ema_end=ema_end,
        elapsed_seconds=elapsed,
        sps=(num_updates * hyper.num_steps) / max(elapsed, 1e-9),
    )


@dataclass
class BaselineResult:
    env_id: str
    episodes: int
    returns: list
    mean: float
    std: float
    ema_end: float
    ema_std: float


def random_baseline(env_id: str, episodes: int = 100, seed: int = 47,
                    frameskip: int = 4) -> BaselineResult:
    """Uniform-random policy scores, same frameskip cadence as training.

    ema_end/ema_std summarize the EMA(0.99) curve over episodic returns;
    a trained agent whose EMA end sits within one ema_std of ema_end is
    treated as not having learned.
    """
    if episodes <= 0:
        raise ValueError(f"episodes must be > 0, got {episodes}")
    env = make(env_id)
    rng = np.random.default_rng(seed)
    returns = []
    for ep in range(episodes):
        env.reset(seed + ep)
        total, done = 0.0, False
        while not done:
            res = frame_skip_step(env, int(rng.integers(env.action_count)), frameskip)
            total += res.reward
            done = res.terminated or res.truncated
        returns.append(total)
    ema = ema_smooth(returns)
    arr = np.asarray(returns, dtype=np.float64)
    return BaselineResult(
        env_id=env_id,
        episodes=episodes,
        returns=returns,
        mean=float(arr.mean()),
        std=float(arr.std()),
        ema_end=float(ema[-1]),
        ema_std=float(ema.std()),
    )
