"""Wire protocol and socket client/server behavior."""

import contextlib
import socket
import struct
import threading
import time

import numpy as np
import pytest

from segrl.proto import (
    ProtocolError,
    ResponseStatusError,
    decode_request,
    decode_response,
    encode_request,
    encode_response,
)
from segrl.remote import (
    ModelError,
    RequestRejected,
    RetriableError,
    SegClient,
    SegClientConfig,
    serve_segmenter,
)
from segrl.segmenter import SegmentLabelMap, SegmenterConfig, segment_labels


def red_1x1():
    return np.array([[[255, 0, 0]]], dtype=np.uint8)


def random_label_map(rng, w, h):
    raw = rng.integers(0, 5, size=(h, w))
    nonzero = np.unique(raw[raw > 0])
    remap = np.zeros(int(raw.max()) + 1, dtype=np.int32)
    for i, v in enumerate(nonzero, start=1):
        remap[v] = i
    return SegmentLabelMap(w, h, remap[raw].astype(np.int32), len(nonzero))


# ------------------------------------------------------------ request coding


def test_request_golden_bytes_1x1_red():
    got = encode_request(red_1x1())
    want = bytes.fromhex("53454731" "00000001" "00000001" "FF0000")
    assert got == want


def test_request_round_trip_random_frames():
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = int(rng.integers(1, 161))
        h = int(rng.integers(1, 211))
        frame = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        back = decode_request(encode_request(frame))
        assert np.array_equal(back, frame)


def test_request_truncation_names_offset_and_cause():
    data = encode_request(red_1x1())
    with pytest.raises(ProtocolError) as e:
        decode_request(data[:-1])
    assert "payload short by 1" in str(e.value)
    assert e.value.offset == len(data) - 1

    with pytest.raises(ProtocolError, match="header short by"):
        decode_request(data[:7])
    with pytest.raises(ProtocolError, match="bad magic"):
        decode_request(b"NOPE" + data[4:])
    with pytest.raises(ProtocolError, match="zero dimension"):
        decode_request(b"SEG1" + struct.pack(">II", 0, 1))
    with pytest.raises(ProtocolError, match="trailing 2 bytes"):
        decode_request(data + b"xy")


def test_request_rejects_non_rgb_input():
    with pytest.raises(ValueError):
        encode_request(np.zeros((4, 4), dtype=np.uint8))


# ----------------------------------------------------------- response coding


def test_error_response_is_exactly_five_bytes():
    for status in (1, 2):
        data = encode_response(status)
        assert len(data) == 5
        assert data[0] == status
        with pytest.raises(ResponseStatusError) as e:
            decode_response(data, 1, 1)
        assert e.value.status == status
    with pytest.raises(ProtocolError, match="trailing"):
        decode_response(encode_response(2) + b"x", 1, 1)


def test_response_round_trip_random_maps():
    rng = np.random.default_rng(1)
    for _ in range(50):
        w = int(rng.integers(1, 40))
        h = int(rng.integers(1, 40))
        seg = random_label_map(rng, w, h)
        back = decode_response(encode_response(0, seg), w, h)
        assert back.count == seg.count
        assert np.array_equal(back.labels, seg.labels)


def test_response_rejects_non_dense_labels():
    # declared count 2 but only label 2 present
    sparse = SegmentLabelMap(1, 1, np.array([[2]], dtype=np.int32), 2)
    with pytest.raises(ProtocolError, match="not dense"):
        decode_response(encode_response(0, sparse), 1, 1)
    toobig = SegmentLabelMap(1, 1, np.array([[3]], dtype=np.int32), 2)
    with pytest.raises(ProtocolError, match="exceeds declared count"):
        decode_response(encode_response(0, toobig), 1, 1)


def test_response_truncation_and_unknown_status():
    seg = SegmentLabelMap(2, 2, np.ones((2, 2), dtype=np.int32), 1)
    data = encode_response(0, seg)
    with pytest.raises(ProtocolError, match="payload short by 4"):
        decode_response(data[:-4], 2, 2)
    with pytest.raises(ProtocolError, match="unknown status"):
        decode_response(b"\x07" + data[1:], 2, 2)
    with pytest.raises(ValueError):
        encode_response(9)
    with pytest.raises(ValueError):
        encode_response(0, None)


# --------------------------------------------------------- loopback sessions


@contextlib.contextmanager
def running_server(seg_fn):
    ready = threading.Event()
    stop = threading.Event()
    thread = threading.Thread(
        target=serve_segmenter, args=("127.0.0.1", 0, seg_fn, ready, stop), daemon=True
    )
    thread.start()
    assert ready.wait(5.0)
    try:
        yield ready.port
    finally:
        stop.set()
        thread.join(10.0)


def make_client(port, timeout_ms=10000):
    client = SegClient(SegClientConfig(f"127.0.0.1:{port}", timeout_ms=timeout_ms))
    client.connect()
    return client


def test_loopback_echo_returns_map_intact():
    rng = np.random.default_rng(2)
    frame = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
    want = segment_labels(frame, SegmenterConfig())
    seen = []

    def seg_fn(got):
        seen.append(got.copy())
        return want

    with running_server(seg_fn) as port:
        client = make_client(port)
        try:
            for _ in range(3):
                out = client.segment(frame)
                assert out.count == want.count
                assert np.array_equal(out.labels, want.labels)
        finally:
            client.close()
    assert len(seen) == 3
    assert np.array_equal(seen[0], frame)


def test_model_error_surfaces_and_connection_survives():
    calls = {"n": 0}
    ok = SegmentLabelMap(1, 1, np.zeros((1, 1), dtype=np.int32), 0)

    def seg_fn(frame):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("model exploded")
        return ok

    with running_server(seg_fn) as port:
        client = make_client(port)
        try:
            with pytest.raises(ModelError, match="status 1"):
                client.segment(red_1x1())
            out = client.segment(red_1x1())  # same connection still works
            assert out.count == 0
        finally:
            client.close()


def test_malformed_request_gets_status_2_then_close():
    with running_server(lambda f: None) as port:
        with socket.create_connection(("127.0.0.1", port), timeout=5.0) as raw:
            raw.sendall(b"NOPE" + struct.pack(">II", 1, 1) + b"\xff\x00\x00")
            reply = raw.recv(16)
            assert reply == b"\x02\x00\x00\x00\x00"
            # server hung up: EOF, or RST if it closed with bytes unread
            try:
                rest = raw.recv(16)
            except ConnectionResetError:
                rest = b""
            assert rest == b""


def test_status_2_maps_to_request_rejected():
    # a server that wrongly rejects everything
    def reject_server(srv, stop):
        srv.settimeout(0.2)
        while not stop.is_set():
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            with conn:
                if conn.recv(4096):
                    conn.sendall(encode_response(2))

    srv = socket.socket()
    srv.bind(("127.0.0.1", 0))
    srv.listen(1)
    stop = threading.Event()
    thread = threading.Thread(target=reject_server, args=(srv, stop), daemon=True)
    thread.start()
    try:
        client = make_client(srv.getsockname()[1])
        with pytest.raises(RequestRejected, match="status 2"):
            client.segment(red_1x1())
        client.close()
    finally:
        stop.set()
        thread.join(5.0)
        srv.close()


def test_timeout_raises_retriable_within_margin():
    def slow_fn(frame):
        time.sleep(1.0)
        return SegmentLabelMap(1, 1, np.zeros((1, 1), dtype=np.int32), 0)

    with running_server(slow_fn) as port:
        client = make_client(port, timeout_ms=300)
        start = time.monotonic()
        with pytest.raises(RetriableError):
            client.segment(red_1x1())
        elapsed = time.monotonic() - start
        assert 0.25 <= elapsed < 0.5  # timeout + 200ms margin
        assert client._sock is None  # connection dropped, retry starts clean
        client.close()


def test_single_in_flight_guard():
    with running_server(lambda f: SegmentLabelMap(1, 1, np.zeros((1, 1), np.int32), 0)) as port:
        client = make_client(port)
        client._in_flight = True
        with pytest.raises(RuntimeError, match="in flight"):
            client.segment(red_1x1())
        client._in_flight = False
        client.close()


def test_reconnects_once_after_connection_loss():
    connections = []
    ok = SegmentLabelMap(1, 1, np.ones((1, 1), dtype=np.int32), 1)

    def flaky_server(srv, stop):
        srv.settimeout(0.2)
        while not stop.is_set():
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            connections.append(conn)
            if len(connections) == 1:
                conn.close()  # drop the first connection outright
                continue
            with conn:
                while True:
                    data = conn.recv(15)
                    if not data:
                        break
                    while len(data) < 15:
                        data += conn.recv(15 - len(data))
                    conn.sendall(encode_response(0, ok))

    srv = socket.socket()
    srv.bind(("127.0.0.1", 0))
    srv.listen(2)
    stop = threading.Event()
    thread = threading.Thread(target=flaky_server, args=(srv, stop), daemon=True)
    thread.start()
    try:
        client = make_client(srv.getsockname()[1])
        out = client.segment(red_1x1())  # recovers via one reconnect
        assert out.count == 1
        assert len(connections) == 2
        client.close()
    finally:
        stop.set()
        thread.join(5.0)
        srv.close()


def test_gives_up_after_second_connection_loss():
    def hostile_server(srv, stop):
        srv.settimeout(0.2)
        while not stop.is_set():
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            conn.close()

    srv = socket.socket()
    srv.bind(("127.0.0.1", 0))
    srv.listen(2)
    stop = threading.Event()
    thread = threading.Thread(target=hostile_server, args=(srv, stop), daemon=True)
    thread.start()
    try:
        client = make_client(srv.getsockname()[1])
        with pytest.raises(OSError):
            client.segment(red_1x1())
        client.close()
    finally:
        stop.set()
        thread.join(5.0)
        srv.close()


def test_client_config_validation():
    with pytest.raises(ValueError):
        SegClientConfig("nonsense").validate()
    with pytest.raises(ValueError):
        SegClientConfig("localhost:99", timeout_ms=0).validate()
    assert SegClientConfig("localhost:7000").address() == ("localhost", 7000)
