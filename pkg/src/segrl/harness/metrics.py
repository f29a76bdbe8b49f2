"""Metrics log (fixed-column CSV), EMA smoothing, PPM frame dumps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

CSV_HEADER = (
    "global_step",
    "episodic_return",
    "episodic_length",
    "sps",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clipfrac",
)


@dataclass
class MetricsRow:
    global_step: int
    episodic_return: Optional[float] = None
    episodic_length: Optional[int] = None
    sps: float = 0.0
    policy_loss: Optional[float] = None
    value_loss: Optional[float] = None
    entropy: Optional[float] = None
    approx_kl: Optional[float] = None
    clipfrac: Optional[float] = None


class MetricsLog:
    """Rows keyed by a strictly increasing global step.

    An episode ending exactly on an update boundary shares that update's
    row; anything else gets its own.  sps must be positive.
    """

    def __init__(self):
        self.rows: list[MetricsRow] = []

    def append(self, row: MetricsRow) -> None:
        if self.rows and row.global_step <= self.rows[-1].global_step:
            raise ValueError(
                f"global_step must increase: {row.global_step} after "
                f"{self.rows[-1].global_step}"
            )
        if not row.sps > 0:
            raise ValueError(f"sps must be > 0, got {row.sps}")
        self.rows.append(row)

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow(
                    [
                        r.global_step,
                        _cell(r.episodic_return),
                        _cell(r.episodic_length),
                        _cell(r.sps),
                        _cell(r.policy_loss),
                        _cell(r.value_loss),
                        _cell(r.entropy),
                        _cell(r.approx_kl),
                        _cell(r.clipfrac),
                    ]
                )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_metrics(path) -> list[MetricsRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        rows = []
        for rec in reader:
            vals = [None if c == "" else float(c) for c in rec]
            rows.append(
                MetricsRow(
                    global_step=int(rec[0]),
                    episodic_return=vals[1],
                    episodic_length=None if vals[2] is None else int(vals[2]),
                    sps=vals[3],
                    policy_loss=vals[4],
                    value_loss=vals[5],
                    entropy=vals[6],
                    approx_kl=vals[7],
                    clipfrac=vals[8],
                )
            )
    return rows


def ema_smooth(series: Sequence[float], factor: float = 0.99) -> np.ndarray:
    """s_0 = x_0; s_t = factor*s_{t-1} + (1-factor)*x_t.

    The last element is the reporting convention's "end result".
    """
    if not 0 <= factor < 1:
        raise ValueError(f"factor must be in [0, 1), got {factor}")
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot smooth an empty series")
    out = np.empty_like(x)
    out[0] = x[0]
    for t in range(1, len(x)):
        out[t] = factor * out[t - 1] + (1 - factor) * x[t]
    return out


def dump_frame(frame: np.ndarray, path) -> None:
    """Write an RGB frame as binary PPM (P6), overwriting any existing file."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise ValueError(f"expected a uint8 HxWx3 frame, got {frame.dtype} {frame.shape}")
    h, w = frame.shape[:2]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(frame.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM written by dump_frame back into a uint8 HxWx3 array."""
    data = Path(path).read_bytes()
    try:
        magic, dims, maxval, raw = data.split(b"\n", 3)
        w, h = map(int, dims.split())
    except ValueError:
        raise ValueError(f"{path}: not a P6 PPM file") from None
    if magic != b"P6" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit P6 PPM file")
    if len(raw) != 3 * w * h:
        raise ValueError(f"{path}: expected {3 * w * h} pixel bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy()
