"""Golden request/response corpus for cross-implementation checks.

Writes raw wire-format bytes (NNN.req / NNN.resp pairs) so a segmentation
server written in any language can be validated byte-for-byte against the
builtin segmenter.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..envs import make
from ..proto import encode_request, encode_response
from ..segmenter import SegmenterConfig, segment_labels

CORPUS_ENVS = ("MiniCatch-v0", "MiniCatch8-v0", "MiniBricks-v0")


def corpus_frames(count: int = 100, seed: int = 47):
    """Deterministic frame sequence cycling the bundled games.

    Yields (env_id, frame).  Each game plays seeded random actions; a few
    steps pass between grabbed frames so the corpus covers varied states.
    """
    rng = np.random.default_rng(seed)
    envs = []
    for i, env_id in enumerate(CORPUS_ENVS):
        env = make(env_id)
        env.reset(seed + i)
        envs.append([env, seed + i])
    for n in range(count):
        env, last_seed = envs[n % len(envs)]
        for _ in range(5):
            action = int(rng.integers(env.action_count))
            result = env.step(action)
            if result.terminated or result.truncated:
                envs[n % len(envs)][1] = last_seed = last_seed + 100
                env.reset(last_seed)
        yield env.env_id, result.frame


def write_corpus(
    out_dir,
    count: int = 100,
    seed: int = 47,
    bits: int = 3,
    min_area: int = 4,
) -> list[tuple[Path, Path]]:
    """Write the corpus; returns the (request_path, response_path) pairs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = SegmenterConfig(bits=bits, min_area=min_area)
    pairs = []
    index_lines = []
    for n, (env_id, frame) in enumerate(corpus_frames(count, seed)):
        req_path = out / f"{n:03d}.req"
        resp_path = out / f"{n:03d}.resp"
        req_path.write_bytes(encode_request(frame))
        resp_path.write_bytes(encode_response(0, segment_labels(frame, config)))
        pairs.append((req_path, resp_path))
        index_lines.append(f"{n:03d} {env_id}")
    (out / "index.txt").write_text("\n".join(index_lines) + "\n")
    return pairs
