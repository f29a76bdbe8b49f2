"""Network engine checks against independent oracles.

The references here do not share code with segrl.nn: convolution is
re-evaluated with nested loops, gradients with central differences on a
float64 copy, Adam with a hand-rolled scalar loop.
"""

import numpy as np
import pytest

from segrl.nn import (
    AdamState,
    ConvSpec,
    GradientError,
    PolicyValueNet,
    ShapeError,
    adam_step,
    categorical_sample,
    clip_grad_norm,
    entropy_from_logits,
    log_softmax,
    orthogonal,
    softmax,
)

TINY_CONV = (ConvSpec(3, 4, 2), ConvSpec(4, 3, 1))
TINY_SHAPE = (2, 12, 12)


def make_tiny(seed, actions=3, hidden=16):
    rng = np.random.default_rng(seed)
    return PolicyValueNet(actions, in_shape=TINY_SHAPE, conv=TINY_CONV, hidden=hidden, rng=rng)


# ---------------------------------------------------------------- references


def ref_conv2d(x, w, b, stride):
    """Direct nested-loop valid convolution, float64. (C,H,W) -> (O,OH,OW)."""
    x = x.astype(np.float64)
    w = w.astype(np.float64)
    o, c, k, _ = w.shape
    h, wd = x.shape[1], x.shape[2]
    oh = (h - k) // stride + 1
    ow = (wd - k) // stride + 1
    out = np.zeros((o, oh, ow))
    for oc in range(o):
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ic in range(c):
                    for di in range(k):
                        for dj in range(k):
                            acc += x[ic, i * stride + di, j * stride + dj] * w[oc, ic, di, dj]
                out[oc, i, j] = acc + b[oc]
    return out


def ref_forward(net, obs_single):
    """Whole-net reference forward for one observation, float64 throughout."""
    x = obs_single.astype(np.float64)
    for i, spec in enumerate(net.conv):
        x = ref_conv2d(x, net.params[f"conv{i}.w"], net.params[f"conv{i}.b"], spec.stride)
        x = np.maximum(x, 0)
    flat = x.reshape(-1)
    h = np.maximum(net.params["fc.w"].astype(np.float64) @ flat + net.params["fc.b"], 0)
    logits = net.params["pi.w"].astype(np.float64) @ h + net.params["pi.b"]
    value = float((net.params["v.w"].astype(np.float64) @ h + net.params["v.b"])[0])
    return logits, value


def ref_adam_trace(x0, grad_fn, lr, steps, beta1=0.9, beta2=0.999, eps=1e-5):
    """Scalar Adam, written out longhand."""
    x, m, v = x0, 0.0, 0.0
    out = []
    for t in range(1, steps + 1):
        g = grad_fn(x)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps)
        out.append(x)
    return out


# ------------------------------------------------------------------- forward


def test_forward_matches_nested_loop_reference():
    rng = np.random.default_rng(11)
    for seed in range(5):
        net = make_tiny(100 + seed).astype(np.float64)
        obs = rng.random(size=(2,) + TINY_SHAPE)
        logits, values = net.forward(obs)
        for row in range(2):
            ref_logits, ref_value = ref_forward(net, obs[row])
            assert np.allclose(logits[row], ref_logits, atol=1e-10)
            assert abs(values[row] - ref_value) < 1e-10


def test_forward_rows_are_independent():
    net = make_tiny(7)
    rng = np.random.default_rng(8)
    obs = rng.random(size=(3,) + TINY_SHAPE).astype(np.float32)
    logits, values = net.forward(obs)
    # identical call -> bit-identical result
    l_again, v_again = net.forward(obs)
    assert np.array_equal(l_again, logits) and np.array_equal(v_again, values)
    # BLAS accumulation order shifts with row position/batch size, so
    # independence holds up to last-ulp float32 noise, not bitwise
    perm = np.array([2, 0, 1])
    lp, vp = net.forward(obs[perm])
    assert np.allclose(lp, logits[perm], rtol=0, atol=1e-6)
    assert np.allclose(vp, values[perm], rtol=0, atol=1e-6)
    l1, v1 = net.forward(obs[1:2])
    assert np.allclose(logits[1], l1[0], rtol=0, atol=1e-5)
    assert abs(values[1] - v1[0]) < 1e-5


def test_forward_shape_validation():
    net = make_tiny(1)
    with pytest.raises(ShapeError):
        net.forward(np.zeros((1, 2, 12, 11), dtype=np.float32))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 12, 12), dtype=np.float32))


def test_default_geometry():
    net = PolicyValueNet(4, rng=np.random.default_rng(0))
    assert net.flat_dim == 64 * 7 * 7
    logits, values = net.forward(np.zeros((1, 4, 84, 84), dtype=np.float32))
    assert logits.shape == (1, 4)
    assert values.shape == (1,)


def test_zeroed_net_outputs_zero_and_bias_passes_through():
    net = make_tiny(3)
    for name in net.params:
        net.params[name] = np.zeros_like(net.params[name])
    obs = np.random.default_rng(0).random(size=(2,) + TINY_SHAPE).astype(np.float32)
    logits, values = net.forward(obs)
    assert np.all(logits == 0) and np.all(values == 0)
    net.params["v.b"][:] = 2.5
    net.params["pi.b"][:] = np.array([1.0, -1.0, 0.5], dtype=np.float32)
    logits, values = net.forward(obs)
    assert np.allclose(values, 2.5)
    assert np.allclose(logits, [[1.0, -1.0, 0.5]] * 2)


# ----------------------------------------------------------------- gradients


def min_abs_preactivation(net, obs):
    net.forward(obs)
    cache = net._cache
    worst = min(float(np.min(np.abs(layer["pre"]))) for layer in cache["conv"])
    return min(worst, float(np.min(np.abs(cache["pre_h"]))))


def test_backward_matches_central_differences_many_nets():
    """All parameter gradients vs central differences on 20+ tiny nets.

    Runs on a float64 copy; instances whose smallest |preactivation| sits
    within 5e-3 of a ReLU kink are resampled, since finite differences
    straddling a kink measure the wrong one-sided slope.
    """
    rng = np.random.default_rng(2024)
    checked = 0
    attempt = 0
    while checked < 20:
        attempt += 1
        assert attempt < 200, "could not find enough kink-free instances"
        net = make_tiny(5000 + attempt).astype(np.float64)
        obs = rng.random(size=(2,) + TINY_SHAPE)
        if min_abs_preactivation(net, obs) < 5e-3:
            continue
        wl = rng.normal(size=(2, net.action_count))
        wv = rng.normal(size=2)

        def loss(n):
            logits, values = n.forward(obs)
            return float(np.sum(wl * logits) + np.sum(wv * values))

        net.forward(obs)
        grads = net.backward(obs, wl, wv)
        h = 1e-3
        for name, p in net.params.items():
            g = grads[name]
            assert g.shape == p.shape
            flat_g = g.reshape(-1).copy()
            for idx in range(p.size):
                orig = p.flat[idx]  # .flat writes through any memory layout
                p.flat[idx] = orig + h
                up = loss(net)
                p.flat[idx] = orig - h
                down = loss(net)
                p.flat[idx] = orig
                fd = (up - down) / (2 * h)
                a = flat_g[idx]
                assert abs(a - fd) <= 1e-4 * max(abs(a), abs(fd)) + 1e-7, (
                    f"net {attempt} param {name}[{idx}]: analytic {a} vs fd {fd}"
                )
        checked += 1


def test_backward_requires_matching_forward():
    net = make_tiny(9)
    with pytest.raises(GradientError):
        net.backward(np.zeros((1,) + TINY_SHAPE), np.zeros((1, 3)), np.zeros(1))
    obs = np.random.default_rng(1).random(size=(2,) + TINY_SHAPE).astype(np.float32)
    net.forward(obs)
    other = obs + 1
    with pytest.raises(GradientError):
        net.backward(other, np.zeros((2, 3)), np.zeros(2))


# ---------------------------------------------------------------------- adam


def test_adam_matches_handrolled_scalar_trace():
    params = {"x": np.array([1.0], dtype=np.float64)}
    state = AdamState.init(params)
    got = []
    for _ in range(10):
        grads = {"x": 2.0 * params["x"]}  # d/dx of x^2
        adam_step(params, grads, state, lr=0.1)
        got.append(float(params["x"][0]))
    want = ref_adam_trace(1.0, lambda x: 2.0 * x, lr=0.1, steps=10)
    assert np.allclose(got, want, rtol=0, atol=1e-12)
    assert state.step == 10


def test_adam_first_step_size_with_eps_outside_sqrt():
    # t=1: m_hat = g, v_hat = g^2, so dx = lr * g / (|g| + eps).
    params = {"x": np.array([0.0], dtype=np.float64)}
    state = AdamState.init(params, eps=1e-5)
    adam_step(params, {"x": np.array([4.0])}, state, lr=2.5e-3)
    assert abs(float(params["x"][0]) + 2.5e-3 * 4.0 / (4.0 + 1e-5)) < 1e-12


def test_adam_rejects_bad_gradients():
    params = {"x": np.array([1.0, 2.0])}
    state = AdamState.init(params)
    with pytest.raises(GradientError) as e:
        adam_step(params, {"x": np.array([np.nan, 0.0])}, state, lr=0.1)
    assert "x" in str(e.value)
    assert state.step == 0  # rejected before mutating anything
    with pytest.raises(GradientError):
        adam_step(params, {"x": np.array([1.0])}, state, lr=0.1)


def test_clip_grad_norm():
    grads = {"a": np.array([3.0], dtype=np.float32), "b": np.array([4.0], dtype=np.float32)}
    norm = clip_grad_norm(grads, 0.5)
    assert abs(norm - 5.0) < 1e-6
    clipped = np.sqrt(float(grads["a"][0] ** 2 + grads["b"][0] ** 2))
    assert abs(clipped - 0.5) < 1e-6
    grads2 = {"a": np.array([0.1]), "b": np.array([0.2])}
    norm2 = clip_grad_norm(grads2, 0.5)
    assert abs(norm2 - np.sqrt(0.05)) < 1e-12
    assert grads2["a"][0] == 0.1 and grads2["b"][0] == 0.2  # under the cap: untouched


# -------------------------------------------------------- heads and sampling


def test_log_softmax_and_entropy_basics():
    logits = np.zeros(4)
    assert np.allclose(log_softmax(logits), np.log(0.25))
    assert abs(entropy_from_logits(logits) - np.log(4)) < 1e-12
    big = np.array([1000.0, 0.0])
    lp = log_softmax(big)
    assert np.all(np.isfinite(lp))
    assert abs(lp[0]) < 1e-12
    assert float(entropy_from_logits(big)) < 1e-6
    assert abs(softmax(big)[0] - 1.0) < 1e-12


def test_categorical_sample_frequencies_and_logprob():
    logits = np.array([0.3, 1.1, -0.4, 0.0])
    p = softmax(logits)
    rng = np.random.default_rng(47)
    n = 100_000
    counts = np.zeros(4)
    lp_seen = {}
    ent_seen = None
    for _ in range(n):
        a, lp, ent = categorical_sample(logits, rng)
        counts[a] += 1
        lp_seen[a] = lp
        ent_seen = ent
    freqs = counts / n
    se = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freqs - p) < 4 * se), (freqs, p)
    ref_lp = log_softmax(logits)
    for a, lp in lp_seen.items():
        assert abs(lp - ref_lp[a]) < 1e-12
    assert abs(ent_seen - float(-(p * np.log(p)).sum())) < 1e-12


def test_categorical_sample_rejects_nonfinite():
    with pytest.raises(ValueError):
        categorical_sample(np.array([np.inf, 0.0]), np.random.default_rng(0))


# ---------------------------------------------------------------------- init


def test_orthogonal_gram_matrix():
    rng = np.random.default_rng(5)
    w = orthogonal(64, 16, np.sqrt(2.0), rng)
    assert np.allclose(w.T @ w, 2.0 * np.eye(16), atol=1e-10)
    w2 = orthogonal(3, 16, 0.01, rng)
    assert np.allclose(w2 @ w2.T, 1e-4 * np.eye(3), atol=1e-12)
    with pytest.raises(ValueError):
        orthogonal(0, 4, 1.0, rng)


def test_init_gains_applied_per_layer():
    net = make_tiny(21)
    w = net.params["fc.w"].astype(np.float64)
    assert np.allclose(w @ w.T, 2.0 * np.eye(net.hidden), atol=1e-4)
    pi = net.params["pi.w"].astype(np.float64)
    assert np.allclose(pi @ pi.T, 1e-4 * np.eye(3), atol=1e-6)
    v = net.params["v.w"].astype(np.float64)
    assert abs((v @ v.T).item() - 1.0) < 1e-4
    for i, spec in enumerate(TINY_CONV):
        cw = net.params[f"conv{i}.w"].astype(np.float64).reshape(spec.out_channels, -1)
        assert np.allclose(cw @ cw.T, 2.0 * np.eye(spec.out_channels), atol=1e-4)
    assert np.all(net.params["fc.b"] == 0)


def test_save_load_roundtrip(tmp_path):
    net = make_tiny(33)
    path = tmp_path / "weights.npz"
    net.save(path)
    other = make_tiny(34)
    other.load(path)
    for name in net.params:
        assert np.array_equal(net.params[name], other.params[name])
