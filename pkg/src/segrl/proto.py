"""Binary wire format for out-of-process segmentation.

Request:  "SEG1" | width u32be | height u32be | RGB payload (3*w*h bytes)
Response: status u8 | segment count u32be | labels (w*h u32be, status 0 only)

Status: 0 ok, 1 model error, 2 bad request.  Non-zero status responses are
exactly 5 bytes.  All integers are big-endian.  Label values must be dense:
every label in [1, count] occurs, nothing exceeds count.
"""

from __future__ import annotations

import struct

import numpy as np

from .segmenter import SegmentLabelMap

MAGIC = b"SEG1"
STATUS_OK = 0
STATUS_MODEL_ERROR = 1
STATUS_BAD_REQUEST = 2

_HEADER = struct.Struct(">4sII")


class ProtocolError(ValueError):
    """Malformed message; carries the byte offset where parsing failed."""

    def __init__(self, offset: int, cause: str):
        self.offset = offset
        self.cause = cause
        super().__init__(f"protocol error at byte {offset}: {cause}")


def encode_request(frame: np.ndarray) -> bytes:
    frame = np.asarray(frame, dtype=np.uint8)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 RGB frame, got shape {frame.shape}")
    h, w = frame.shape[:2]
    return _HEADER.pack(MAGIC, w, h) + frame.tobytes()


def decode_request(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ProtocolError(len(data), f"header short by {_HEADER.size - len(data)}")
    magic, w, h = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ProtocolError(0, f"bad magic {magic!r}")
    if w == 0 or h == 0:
        raise ProtocolError(4, f"zero dimension {w}x{h}")
    expected = _HEADER.size + 3 * w * h
    if len(data) < expected:
        raise ProtocolError(len(data), f"payload short by {expected - len(data)}")
    if len(data) > expected:
        raise ProtocolError(expected, f"trailing {len(data) - expected} bytes")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    return pixels.reshape(h, w, 3).copy()


def encode_response(status: int, seg: SegmentLabelMap | None = None) -> bytes:
    if status not in (STATUS_OK, STATUS_MODEL_ERROR, STATUS_BAD_REQUEST):
        raise ValueError(f"invalid status {status}")
    if status != STATUS_OK:
        return bytes([status]) + struct.pack(">I", 0)
    if seg is None:
        raise ValueError("status 0 requires a label map")
    labels = np.ascontiguousarray(seg.labels, dtype=">u4")
    return bytes([status]) + struct.pack(">I", seg.count) + labels.tobytes()


def decode_response(data: bytes, width: int, height: int) -> SegmentLabelMap:
    """Parse a response for a width x height request.

    Raises ProtocolError on malformed bytes; returns the label map on
    status 0.  Non-zero statuses are surfaced as (status, message) via
    ResponseStatusError so the caller can map them to its own errors.
    """
    if len(data) < 5:
        raise ProtocolError(len(data), f"response short by {5 - len(data)}")
    status = data[0]
    (count,) = struct.unpack_from(">I", data, 1)
    if status in (STATUS_MODEL_ERROR, STATUS_BAD_REQUEST):
        if len(data) != 5:
            raise ProtocolError(5, f"trailing {len(data) - 5} bytes on status {status}")
        raise ResponseStatusError(status)
    if status != STATUS_OK:
        raise ProtocolError(0, f"unknown status {status}")
    expected = 5 + 4 * width * height
    if len(data) < expected:
        raise ProtocolError(len(data), f"payload short by {expected - len(data)}")
    if len(data) > expected:
        raise ProtocolError(expected, f"trailing {len(data) - expected} bytes")
    labels = np.frombuffer(data, dtype=">u4", offset=5).astype(np.int32).reshape(height, width)
    if labels.size:
        mx = int(labels.max())
        if mx > count:
            raise ProtocolError(5, f"label {mx} exceeds declared count {count}")
        nonzero = np.unique(labels[labels > 0])
        if len(nonzero) != count:
            raise ProtocolError(
                5, f"labels not dense: {len(nonzero)} distinct vs count {count}"
            )
    elif count != 0:
        raise ProtocolError(1, f"count {count} with empty label map")
    return SegmentLabelMap(width, height, labels, int(count))


class ResponseStatusError(RuntimeError):
    """Server answered with a non-zero status byte."""

    def __init__(self, status: int):
        self.status = status
        kind = "model error" if status == STATUS_MODEL_ERROR else "bad request"
        super().__init__(f"server returned status {status} ({kind})")


def request_frame_size(header: bytes) -> tuple[int, int, int]:
    """Validate a 12-byte request header; return (width, height, payload bytes)."""
    if len(header) != _HEADER.size:
        raise ProtocolError(len(header), f"header short by {_HEADER.size - len(header)}")
    magic, w, h = _HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(0, f"bad magic {magic!r}")
    if w == 0 or h == 0:
        raise ProtocolError(4, f"zero dimension {w}x{h}")
    return w, h, 3 * w * h
