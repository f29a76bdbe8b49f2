"""Socket client for segmentation services, plus a small reference server.

One connection per training run, one request in flight at a time.  The
client fails fast when the endpoint is unreachable at connect() time; a
broken connection mid-run is retried by reconnecting exactly once.  A
timeout is surfaced as RetriableError so the caller can decide.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass

import numpy as np

from .proto import (
    STATUS_BAD_REQUEST,
    STATUS_MODEL_ERROR,
    STATUS_OK,
    ProtocolError,
    ResponseStatusError,
    decode_response,
    encode_request,
    encode_response,
    request_frame_size,
)
from .segmenter import SegmentLabelMap

__all__ = [
    "SegClientConfig",
    "SegClient",
    "RetriableError",
    "ModelError",
    "RequestRejected",
    "serve_segmenter",
]


class RetriableError(RuntimeError):
    """Timeout; the same request may be retried by the caller."""


class ModelError(RuntimeError):
    """The server's model failed on this frame (status 1)."""


class RequestRejected(RuntimeError):
    """The server rejected the request as malformed (status 2): caller bug."""


@dataclass
class SegClientConfig:
    endpoint: str  # "host:port"
    timeout_ms: int = 10000

    def validate(self) -> "SegClientConfig":
        host, _, port = self.endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"endpoint must be host:port, got {self.endpoint!r}")
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be > 0, got {self.timeout_ms}")
        return self

    def address(self) -> tuple[str, int]:
        host, _, port = self.endpoint.rpartition(":")
        return host, int(port)


class SegClient:
    def __init__(self, config: SegClientConfig):
        self.config = config.validate()
        self._sock: socket.socket | None = None
        self._in_flight = False

    def connect(self) -> None:
        if self._sock is not None:
            return
        host, port = self.config.address()
        try:
            self._sock = socket.create_connection(
                (host, port), timeout=self.config.timeout_ms / 1000.0
            )
            self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as e:
            self._sock = None
            raise ConnectionError(
                f"segmentation service unreachable at {self.config.endpoint}: {e}"
            ) from e

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def _recv_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            try:
                chunk = self._sock.recv(remaining)
            except socket.timeout as e:
                raise RetriableError(
                    f"segmentation request timed out after {self.config.timeout_ms} ms"
                ) from e
            if not chunk:
                raise ConnectionResetError("server closed the connection")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def _round_trip(self, payload: bytes, width: int, height: int) -> SegmentLabelMap:
        try:
            self._sock.sendall(payload)
        except socket.timeout as e:
            raise RetriableError(
                f"segmentation request timed out after {self.config.timeout_ms} ms"
            ) from e
        head = self._recv_exact(5)
        status = head[0]
        if status == STATUS_OK:
            body = self._recv_exact(4 * width * height)
            return decode_response(head + body, width, height)
        return decode_response(head, width, height)  # raises ResponseStatusError

    def segment(self, frame: np.ndarray) -> SegmentLabelMap:
        """One request, one response. Reconnects once on connection loss."""
        if self._in_flight:
            raise RuntimeError("a segmentation request is already in flight")
        if self._sock is None:
            self.connect()
        h, w = frame.shape[:2]
        payload = encode_request(frame)
        self._in_flight = True
        try:
            try:
                return self._round_trip(payload, w, h)
            except OSError:
                # timeouts were converted to RetriableError above, so this
                # is a genuine connection loss: reconnect once, retry once
                self.close()
                self.connect()
                return self._round_trip(payload, w, h)
        except RetriableError:
            # a late reply would desync the stream; drop the connection so
            # a retry starts clean
            self.close()
            raise
        except ResponseStatusError as e:
            if e.status == STATUS_MODEL_ERROR:
                raise ModelError(str(e)) from e
            raise RequestRejected(str(e)) from e
        finally:
            self._in_flight = False


def serve_segmenter(
    host: str,
    port: int,
    seg_fn,
    ready: threading.Event | None = None,
    stop: threading.Event | None = None,
):
    """Serial segmentation server: one connection, one request at a time.

    seg_fn(frame) -> SegmentLabelMap.  Malformed request -> status 2, then
    the connection closes (a desynced stream cannot be trusted).  seg_fn
    exception -> status 1, connection stays up.  Runs until `stop` is set;
    returns the bound port (useful with port=0).
    """
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    bound_port = srv.getsockname()[1]
    srv.settimeout(0.2)
    if ready is not None:
        ready.port = bound_port
        ready.set()

    def recv_exact(conn, n):
        chunks = []
        remaining = n
        while remaining > 0:
            chunk = conn.recv(remaining)
            if not chunk:
                return None
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    try:
        while stop is None or not stop.is_set():
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            with conn:
                conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                while stop is None or not stop.is_set():
                    header = recv_exact(conn, 12)
                    if header is None:
                        break
                    try:
                        w, h, payload_len = request_frame_size(header)
                    except ProtocolError:
                        conn.sendall(encode_response(STATUS_BAD_REQUEST))
                        break
                    body = recv_exact(conn, payload_len)
                    if body is None:
                        break
                    frame = np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
                    try:
                        seg = seg_fn(frame)
                        reply = encode_response(STATUS_OK, seg)
                    except Exception:
                        reply = encode_response(STATUS_MODEL_ERROR)
                    conn.sendall(reply)
    finally:
        srv.close()
    return bound_port
