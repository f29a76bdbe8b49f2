"""PPO with generalized advantage estimation.

The update follows the standard clipped-surrogate recipe: per epoch the
step indices are shuffled and split into minibatches; advantages are
normalized per minibatch (with a zero-std guard); the policy term clips the
probability ratio, the value term clips the value delta; gradients are
globally norm-clipped and applied with Adam.

Gradients of the composite loss with respect to logits and values are
derived in closed form and fed to the network's backward pass:

    d logp[a] / d logit_j   = 1[j == a] - p_j
    d H / d logit_j         = -p_j (logp_j + H)
    policy branch gradient  = -A * r           (unclipped branch)
                            = -A * clip(r) * 1[r inside band]  (clipped)
    value branch gradient   = (v - R)          or clipped analogue
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .nn import (
    AdamState,
    PolicyValueNet,
    adam_step,
    categorical_sample,
    clip_grad_norm,
    log_softmax,
)

__all__ = [
    "PpoHyper",
    "RolloutBuffer",
    "UpdateStats",
    "EnvSession",
    "collect_rollout",
    "compute_gae",
    "ppo_update",
]


@dataclass
class PpoHyper:
    clip_coef: float = 0.25
    learning_rate: float = 2.5e-3
    gamma: float = 0.99
    gae_lambda: float = 0.95
    update_epochs: int = 2
    num_minibatches: int = 8
    num_steps: int = 128
    total_timesteps: int = 20000
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    max_grad_norm: float = 0.5
    norm_adv: bool = True
    clip_vloss: bool = True
    anneal_lr: bool = True

    def validate(self) -> "PpoHyper":
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_coef <= 0:
            raise ValueError(f"clip_coef must be > 0, got {self.clip_coef}")
        if self.num_steps % self.num_minibatches != 0:
            raise ValueError(
                f"num_minibatches ({self.num_minibatches}) must divide "
                f"num_steps ({self.num_steps})"
            )
        return self


@dataclass
class RolloutBuffer:
    obs: np.ndarray  # (T,) + obs shape, float32
    actions: np.ndarray  # (T,), int64
    log_probs: np.ndarray  # (T,), float32
    rewards: np.ndarray  # (T,), float32
    values: np.ndarray  # (T,), float32
    dones: np.ndarray  # (T,), float32; 1.0 when the step ended an episode
    bootstrap_value: float
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None

    def __post_init__(self):
        t = len(self.actions)
        for name in ("obs", "log_probs", "rewards", "values", "dones"):
            if len(getattr(self, name)) != t:
                raise ValueError(f"buffer field {name} length != num_steps {t}")
        for name in ("log_probs", "rewards", "values"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"buffer field {name} contains non-finite values")


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float
    clipfrac: float
    minibatches: list = field(default_factory=list)


class EnvSession:
    """A pipeline env plus bookkeeping across rollouts.

    Auto-resets on episode end with seeds base_seed, base_seed+1, ... so a
    whole run replays from one seed.  Completed episodes pile up in
    `completed` as (global_step, raw_return, length) until drained.
    """

    def __init__(self, pipe, base_seed: int):
        self.pipe = pipe
        self.base_seed = base_seed
        self.episodes = 0
        self.global_step = 0
        self.completed: list[tuple[int, float, int]] = []
        self._ep_return = 0.0
        self._ep_length = 0
        self.obs = pipe.reset(base_seed)

    def step(self, action: int):
        res = self.pipe.step(action)
        self.global_step += 1
        self._ep_return += res.raw_reward
        self._ep_length += 1
        done = res.terminated or res.truncated
        if done:
            self.completed.append((self.global_step, self._ep_return, self._ep_length))
            self.episodes += 1
            self._ep_return = 0.0
            self._ep_length = 0
            self.obs = self.pipe.reset(self.base_seed + self.episodes)
        else:
            self.obs = res.obs
        return res.reward, done

    def drain_completed(self):
        out, self.completed = self.completed, []
        return out


def collect_rollout(
    env: EnvSession, net: PolicyValueNet, num_steps: int, rng: np.random.Generator
) -> RolloutBuffer:
    """Run the policy num_steps steps, auto-resetting on episode ends."""
    obs_buf = np.empty((num_steps,) + env.obs.shape, dtype=np.float32)
    actions = np.empty(num_steps, dtype=np.int64)
    log_probs = np.empty(num_steps, dtype=np.float32)
    rewards = np.empty(num_steps, dtype=np.float32)
    values = np.empty(num_steps, dtype=np.float32)
    dones = np.empty(num_steps, dtype=np.float32)
    for t in range(num_steps):
        obs = env.obs
        logits, value = net.forward(obs[None])
        action, logp, _ = categorical_sample(logits[0], rng)
        reward, done = env.step(action)
        obs_buf[t] = obs
        actions[t] = action
        log_probs[t] = logp
        rewards[t] = reward
        values[t] = value[0]
        dones[t] = 1.0 if done else 0.0
    _, bootstrap = net.forward(env.obs[None])
    return RolloutBuffer(
        obs_buf, actions, log_probs, rewards, values, dones, float(bootstrap[0])
    )


def compute_gae(rewards, values, dones, bootstrap_value, gamma, lam):
    """delta_t = r_t + g*V_{t+1}*(1-d_t) - V_t;  A_t = delta_t + g*l*(1-d_t)*A_{t+1}.

    Computed in float64; returns (advantages, returns) with returns = A + V.
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(dones, dtype=np.float64)
    t_total = len(r)
    if not (len(v) == len(d) == t_total):
        raise ValueError("rewards, values, dones must share a length")
    adv = np.zeros(t_total, dtype=np.float64)
    last = 0.0
    next_value = float(bootstrap_value)
    for t in range(t_total - 1, -1, -1):
        mask = 1.0 - d[t]
        delta = r[t] + gamma * next_value * mask - v[t]
        last = delta + gamma * lam * mask * last
        adv[t] = last
        next_value = v[t]
    return adv, adv + v


def _policy_value_grads(logits, values, actions, old_logp, adv, returns, old_values, hyper):
    """Closed-form minibatch loss, stats, and upstream gradients."""
    b = len(actions)
    logp_all = log_softmax(logits.astype(np.float64))
    p = np.exp(logp_all)
    new_logp = logp_all[np.arange(b), actions]
    entropy = -(p * logp_all).sum(axis=1)

    log_ratio = new_logp - old_logp
    ratio = np.exp(log_ratio)
    clipped_ratio = np.clip(ratio, 1.0 - hyper.clip_coef, 1.0 + hyper.clip_coef)
    in_band = (ratio >= 1.0 - hyper.clip_coef) & (ratio <= 1.0 + hyper.clip_coef)

    loss_unclipped = -adv * ratio
    loss_clipped = -adv * clipped_ratio
    use_unclipped = loss_unclipped >= loss_clipped
    pg_loss = float(np.mean(np.maximum(loss_unclipped, loss_clipped)))

    v = values.astype(np.float64)
    verr = v - returns
    if hyper.clip_vloss:
        v_clipped = old_values + np.clip(v - old_values, -hyper.clip_coef, hyper.clip_coef)
        verr_clipped = v_clipped - returns
        v_in_band = np.abs(v - old_values) <= hyper.clip_coef
        v_use_unclipped = verr**2 >= verr_clipped**2
        v_loss = float(0.5 * np.mean(np.maximum(verr**2, verr_clipped**2)))
        dvalues = np.where(v_use_unclipped, verr, verr_clipped * v_in_band) * (
            hyper.vf_coef / b
        )
    else:
        v_loss = float(0.5 * np.mean(verr**2))
        dvalues = verr * (hyper.vf_coef / b)

    # d pg / d new_logp, honoring the active branch of the max
    dlp = np.where(use_unclipped, -adv * ratio, -adv * clipped_ratio * in_band) / b
    onehot = np.zeros_like(logp_all)
    onehot[np.arange(b), actions] = 1.0
    dlogits = dlp[:, None] * (onehot - p)
    # entropy bonus: d(-c*mean(H))/d logit_j = (c/b) * p_j * (logp_j + H)
    dlogits += (hyper.ent_coef / b) * p * (logp_all + entropy[:, None])

    ent_mean = float(entropy.mean())
    approx_kl = float(np.mean((ratio - 1.0) - log_ratio))
    clipfrac = float(np.mean(np.abs(ratio - 1.0) > hyper.clip_coef))
    stats = {
        "policy_loss": pg_loss,
        "value_loss": v_loss,
        "entropy": ent_mean,
        "approx_kl": approx_kl,
        "clipfrac": clipfrac,
    }
    return stats, dlogits, dvalues


def ppo_update(
    net: PolicyValueNet,
    adam: AdamState,
    buffer: RolloutBuffer,
    hyper: PpoHyper,
    rng: np.random.Generator,
    lr: Optional[float] = None,
) -> UpdateStats:
    """One PPO update over the buffer. Requires advantages precomputed."""
    hyper.validate()
    if buffer.advantages is None or buffer.returns is None:
        raise ValueError("compute_gae must fill buffer.advantages/returns first")
    lr = hyper.learning_rate if lr is None else lr
    t_total = len(buffer.actions)
    mb_size = t_total // hyper.num_minibatches
    all_adv = np.asarray(buffer.advantages, dtype=np.float64)
    all_ret = np.asarray(buffer.returns, dtype=np.float64)
    mb_stats = []
    for _ in range(hyper.update_epochs):
        order = rng.permutation(t_total)
        for start in range(0, t_total, mb_size):
            idx = order[start : start + mb_size]
            adv = all_adv[idx]
            if hyper.norm_adv:
                std = adv.std()
                if std < 1e-8:
                    adv = np.zeros_like(adv)  # degenerate: all equal
                else:
                    adv = (adv - adv.mean()) / (std + 1e-8)
            logits, values = net.forward(buffer.obs[idx])
            stats, dlogits, dvalues = _policy_value_grads(
                logits,
                values,
                buffer.actions[idx],
                buffer.log_probs[idx].astype(np.float64),
                adv,
                all_ret[idx],
                buffer.values[idx].astype(np.float64),
                hyper,
            )
            if not all(np.isfinite(v) for v in stats.values()):
                raise FloatingPointError(f"non-finite loss in PPO update: {stats}")
            grads = net.backward(buffer.obs[idx], dlogits, dvalues)
            stats["grad_norm"] = clip_grad_norm(grads, hyper.max_grad_norm)
            adam_step(net.params, grads, adam, lr)
            mb_stats.append(stats)
    keys = ("policy_loss", "value_loss", "entropy", "approx_kl", "clipfrac")
    agg = {k: float(np.mean([s[k] for s in mb_stats])) for k in keys}
    return UpdateStats(minibatches=mb_stats, **agg)
