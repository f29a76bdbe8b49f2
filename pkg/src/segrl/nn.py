"""Minimal dense/convolutional network engine with hand-derived gradients.

Everything is plain numpy. Training runs in float32; a float64 copy of a
network (``net.astype(np.float64)``) is used by the gradient checks so the
finite-difference oracle is not drowned in single-precision noise.

No global RNG anywhere: every stochastic routine takes a
``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ConvSpec",
    "PolicyValueNet",
    "AdamState",
    "adam_step",
    "orthogonal",
    "log_softmax",
    "softmax",
    "entropy_from_logits",
    "categorical_sample",
    "clip_grad_norm",
    "GradientError",
    "ShapeError",
]


class ShapeError(ValueError):
    """Input does not match the shape the network was built for."""


class GradientError(ValueError):
    """A gradient contains NaN/inf or does not match its parameter."""


def orthogonal(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal (rows x cols) matrix scaled by ``gain``.

    The Gram matrix along the smaller dimension is gain^2 * I.  Computed in
    float64; callers cast as needed.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"orthogonal needs rows, cols >= 1, got {rows}x{cols}")
    a = rng.normal(size=(rows, cols)) if rows >= cols else rng.normal(size=(cols, rows))
    q, r = np.linalg.qr(a)
    # Fix the sign ambiguity of QR so the distribution is uniform (Haar).
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def entropy_from_logits(logits: np.ndarray) -> np.ndarray:
    """Row-wise entropy -sum(p log p) of the softmax distribution."""
    logp = log_softmax(logits)
    p = np.exp(logp)
    return -(p * logp).sum(axis=-1)


def categorical_sample(logits: np.ndarray, rng: np.random.Generator) -> tuple[int, float, float]:
    """Sample one action from softmax(logits).

    Returns (action, log_prob of that action, entropy of the distribution).
    """
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(logits)):
        raise ValueError("categorical_sample: logits must be finite")
    logp = log_softmax(logits)
    p = np.exp(logp)
    u = rng.random()
    action = int(np.searchsorted(np.cumsum(p), u))
    action = min(action, logits.shape[0] - 1)  # guard the u ~ 1.0 edge
    entropy = float(-(p * logp).sum())
    return action, float(logp[action]), entropy


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: int
    stride: int


# The standard pixel-agent stack: 3 convs + 2 dense layers.
# 4x84x84 -> 32x20x20 -> 64x9x9 -> 64x7x7 -> 512 -> heads.
DEFAULT_CONV = (ConvSpec(32, 8, 4), ConvSpec(64, 4, 2), ConvSpec(64, 3, 1))
DEFAULT_HIDDEN = 512


def _im2col(x: np.ndarray, kernel: int, stride: int) -> tuple[np.ndarray, int, int]:
    """Extract sliding windows: (B,C,H,W) -> (B*OH*OW, C*k*k), valid padding."""
    b, c, h, w = x.shape
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    sb, sc, sh, sw = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x,
        shape=(b, oh, ow, c, kernel, kernel),
        strides=(sb, sh * stride, sw * stride, sc, sh, sw),
        writeable=False,
    )
    cols = np.ascontiguousarray(windows).reshape(b * oh * ow, c * kernel * kernel)
    return cols, oh, ow


class PolicyValueNet:
    """Convolutional policy/value network with exact analytic gradients.

    ``forward`` caches activations; ``backward`` consumes the cache and must
    be called with the same batch.  One instance is confined to one thread.
    """

    def __init__(
        self,
        action_count: int,
        in_shape: tuple[int, int, int] = (4, 84, 84),
        conv: Sequence[ConvSpec] = DEFAULT_CONV,
        hidden: int = DEFAULT_HIDDEN,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        if action_count < 1:
            raise ValueError("action_count must be >= 1")
        self.action_count = action_count
        self.in_shape = tuple(in_shape)
        self.conv = tuple(conv)
        self.hidden = hidden
        self.dtype = np.dtype(dtype)
        self._cache = None

        c, h, w = self.in_shape
        for spec in self.conv:
            h = (h - spec.kernel) // spec.stride + 1
            w = (w - spec.kernel) // spec.stride + 1
            if h < 1 or w < 1:
                raise ValueError(f"conv stack does not fit input {self.in_shape}")
            c = spec.out_channels
        self.flat_dim = c * h * w

        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: dict[str, np.ndarray] = {}
        cin = self.in_shape[0]
        for i, spec in enumerate(self.conv):
            fan_in = cin * spec.kernel * spec.kernel
            wmat = orthogonal(spec.out_channels, fan_in, np.sqrt(2.0), rng)
            self.params[f"conv{i}.w"] = wmat.reshape(
                spec.out_channels, cin, spec.kernel, spec.kernel
            ).astype(self.dtype)
            self.params[f"conv{i}.b"] = np.zeros(spec.out_channels, dtype=self.dtype)
            cin = spec.out_channels
        self.params["fc.w"] = orthogonal(hidden, self.flat_dim, np.sqrt(2.0), rng).astype(self.dtype)
        self.params["fc.b"] = np.zeros(hidden, dtype=self.dtype)
        # Small policy-head gain keeps the initial policy near uniform.
        self.params["pi.w"] = orthogonal(action_count, hidden, 0.01, rng).astype(self.dtype)
        self.params["pi.b"] = np.zeros(action_count, dtype=self.dtype)
        self.params["v.w"] = orthogonal(1, hidden, 1.0, rng).astype(self.dtype)
        self.params["v.b"] = np.zeros(1, dtype=self.dtype)

    def param_names(self) -> list[str]:
        return list(self.params.keys())

    def astype(self, dtype) -> "PolicyValueNet":
        """Copy of this net with parameters cast to ``dtype`` (shadow eval)."""
        clone = PolicyValueNet.__new__(PolicyValueNet)
        clone.action_count = self.action_count
        clone.in_shape = self.in_shape
        clone.conv = self.conv
        clone.hidden = self.hidden
        clone.dtype = np.dtype(dtype)
        clone.flat_dim = self.flat_dim
        clone._cache = None
        clone.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return clone

    def forward(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batch forward: (B,) + in_shape -> logits (B, A), values (B,).

        Rows are independent: row i of the output depends only on obs[i].
        """
        obs = np.asarray(obs)
        if obs.ndim != 4 or obs.shape[1:] != self.in_shape:
            raise ShapeError(
                f"expected observations shaped (B, {', '.join(map(str, self.in_shape))}), "
                f"got {obs.shape}"
            )
        x = obs.astype(self.dtype, copy=False)
        cache = {"obs": obs, "conv": []}
        for i, spec in enumerate(self.conv):
            wflat = self.params[f"conv{i}.w"].reshape(spec.out_channels, -1)
            cols, oh, ow = _im2col(x, spec.kernel, spec.stride)
            pre = cols @ wflat.T + self.params[f"conv{i}.b"]
            act = np.maximum(pre, 0)
            cache["conv"].append({"cols": cols, "pre": pre, "oh": oh, "ow": ow, "in_shape": x.shape})
            x = act.reshape(x.shape[0], oh, ow, spec.out_channels).transpose(0, 3, 1, 2)
        b = x.shape[0]
        flat = x.reshape(b, self.flat_dim)
        pre_h = flat @ self.params["fc.w"].T + self.params["fc.b"]
        h = np.maximum(pre_h, 0)
        cache["flat"] = flat
        cache["pre_h"] = pre_h
        cache["h"] = h
        logits = h @ self.params["pi.w"].T + self.params["pi.b"]
        values = (h @ self.params["v.w"].T + self.params["v.b"])[:, 0]
        self._cache = cache
        return logits, values

    def backward(
        self, obs: np.ndarray, dlogits: np.ndarray, dvalues: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Gradients of sum(dlogits*logits) + sum(dvalues*values) w.r.t. params.

        Requires a preceding forward on the same batch.
        """
        cache = self._cache
        if cache is None:
            raise GradientError("backward called without a preceding forward")
        cached_obs = cache["obs"]
        if cached_obs is not obs and (
            cached_obs.shape != np.shape(obs) or not np.array_equal(cached_obs, obs)
        ):
            raise GradientError("backward batch does not match the last forward batch")

        dlogits = np.asarray(dlogits, dtype=self.dtype)
        dvalues = np.asarray(dvalues, dtype=self.dtype).reshape(-1, 1)
        grads: dict[str, np.ndarray] = {}
        h = cache["h"]
        grads["pi.w"] = dlogits.T @ h
        grads["pi.b"] = dlogits.sum(axis=0)
        grads["v.w"] = dvalues.T @ h
        grads["v.b"] = dvalues.sum(axis=0)
        dh = dlogits @ self.params["pi.w"] + dvalues @ self.params["v.w"]
        dh = dh * (cache["pre_h"] > 0)
        grads["fc.w"] = dh.T @ cache["flat"]
        grads["fc.b"] = dh.sum(axis=0)
        dflat = dh @ self.params["fc.w"]

        # Walk the conv stack in reverse, un-doing im2col with strided adds.
        last = cache["conv"][-1]
        b = cache["flat"].shape[0]
        dx = dflat.reshape(
            b, self.conv[-1].out_channels, last["oh"], last["ow"]
        )
        for i in range(len(self.conv) - 1, -1, -1):
            spec = self.conv[i]
            layer = cache["conv"][i]
            oh, ow = layer["oh"], layer["ow"]
            dact = dx.transpose(0, 2, 3, 1).reshape(b * oh * ow, spec.out_channels)
            dpre = dact * (layer["pre"] > 0)
            wflat = self.params[f"conv{i}.w"].reshape(spec.out_channels, -1)
            grads[f"conv{i}.w"] = (dpre.T @ layer["cols"]).reshape(
                self.params[f"conv{i}.w"].shape
            )
            grads[f"conv{i}.b"] = dpre.sum(axis=0)
            if i == 0:
                break  # gradient w.r.t. the observation is not needed
            dcols = (dpre @ wflat).reshape(
                b, oh, ow, layer["in_shape"][1], spec.kernel, spec.kernel
            )
            dx = np.zeros(layer["in_shape"], dtype=self.dtype)
            s = spec.stride
            for di in range(spec.kernel):
                for dj in range(spec.kernel):
                    dx[:, :, di : di + s * oh : s, dj : dj + s * ow : s] += dcols[
                        :, :, :, :, di, dj
                    ].transpose(0, 3, 1, 2)
        return grads

    def save(self, path) -> None:
        np.savez_compressed(path, **self.params)

    def load(self, path) -> None:
        with np.load(path) as data:
            for name in self.params:
                arr = data[name].astype(self.dtype)
                if arr.shape != self.params[name].shape:
                    raise ShapeError(f"checkpoint shape mismatch for {name}")
                self.params[name] = arr


@dataclass
class AdamState:
    """Adam moments, shaped like the parameters they track.

    eps sits outside the square root: p -= lr * m_hat / (sqrt(v_hat) + eps).
    """

    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-5
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, params: dict[str, np.ndarray], beta1=0.9, beta2=0.999, eps=1e-5) -> "AdamState":
        return cls(
            step=0,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update, in place. Returns (params, state)."""
    if lr <= 0:
        raise ValueError("adam_step: lr must be > 0")
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise GradientError(f"gradient shape mismatch for {name}: {g.shape} vs {p.shape}")
        if not np.all(np.isfinite(g)):
            raise GradientError(f"non-finite gradient for parameter {name}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * (g * g)
        m_hat = state.m[name] / (1 - b1**t)
        v_hat = state.v[name] / (1 - b2**t)
        p -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype, copy=False)
    return params, state


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is <= max_norm.

    Returns the pre-clip norm.
    """
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * np.asarray(scale, dtype=grads[name].dtype)
    return norm
