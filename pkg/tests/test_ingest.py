"""Wire protocol conformance and the ingest service's ordering guarantees."""

import socket
import threading
import time

import pytest

from ebb.ingest import (
    FRAME_HEARTBEAT,
    FRAME_RECORD,
    IngestClient,
    IngestServer,
    MalformedHello,
    ProtocolError,
    REPLY_ACK,
    REPLY_NAK,
    NAK_MALFORMED_HELLO,
    NAK_VERSION_MISMATCH,
    StreamParser,
    VersionMismatch,
    WireRecord,
    decode_record_body,
    encode_heartbeat,
    encode_hello,
    encode_record_frame,
    parse_hello,
)
from ebb.records import BatteryStatus, ChannelTag, SpeechText
from ebb.recorder import RingLog, read_log

from conftest import BIG_POLICY


def make_wire(i: int) -> WireRecord:
    return WireRecord(
        t_mono_ns=i * 10**6,
        t_wall_ms=1_700_000_000_000 + i,
        payload=BatteryStatus(level=round((i % 100) / 100, 2)),
    )


@pytest.fixture()
def server(tmp_path):
    log = RingLog.create(tmp_path, BIG_POLICY, robot_id="pepper-01", model="Pepper")
    srv = IngestServer(log, host="127.0.0.1", port=0, heartbeat_ms=200)
    srv.start()
    yield srv
    srv.stop()
    log.close()


def wait_for(predicate, timeout=5.0, interval=0.01):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False


# -- pure protocol ------------------------------------------------------------


def test_hello_round_trip():
    session = parse_hello(encode_hello("pepper-01", "Pepper", 1))
    assert session.robot_id == "pepper-01"
    assert session.model == "Pepper"
    assert session.schema_version == 1


def test_hello_schema_mismatch():
    with pytest.raises(VersionMismatch):
        parse_hello(encode_hello("pepper-01", "Pepper", 2))


def test_hello_garbage():
    with pytest.raises(MalformedHello):
        parse_hello(b"\x01\x02\x03")


def test_record_body_round_trip():
    wire = make_wire(3)
    frame = encode_record_frame(wire)
    parser = StreamParser()
    messages = parser.feed(frame)
    assert len(messages) == 1
    ftype, body = messages[0]
    assert ftype == FRAME_RECORD
    assert decode_record_body(body) == wire


def test_stream_parser_handles_any_chunking():
    frames = b"".join(encode_record_frame(make_wire(i)) for i in range(10))
    frames += encode_heartbeat(123)
    for chunk in (1, 2, 3, 7, len(frames)):
        parser = StreamParser()
        out = []
        for at in range(0, len(frames), chunk):
            out.extend(parser.feed(frames[at : at + chunk]))
        assert parser.error is None
        assert len(out) == 11
        assert [t for t, _ in out].count(FRAME_HEARTBEAT) == 1


def test_stream_parser_boundary_fuzz_no_reorder_no_duplicate():
    """Truncate the stream at every byte: parsed prefix only, in order."""
    wires = [make_wire(i) for i in range(8)]
    stream = b"".join(encode_record_frame(w) for w in wires)
    boundaries = []
    at = 0
    for w in wires:
        at += len(encode_record_frame(w))
        boundaries.append(at)
    for cut in range(len(stream) + 1):
        parser = StreamParser()
        messages = parser.feed(stream[:cut])
        complete = sum(1 for b in boundaries if b <= cut)
        assert len(messages) == complete, f"cut={cut}"
        decoded = [decode_record_body(b) for _, b in messages]
        assert decoded == wires[:complete]
        assert parser.error is None


def test_stream_parser_flags_garbage_after_valid_frames():
    stream = encode_record_frame(make_wire(1)) + b"\xff\xff\xff\xff\xff"
    parser = StreamParser()
    messages = parser.feed(stream)
    assert len(messages) == 1
    assert isinstance(parser.error, ProtocolError)
    assert parser.feed(b"more") == []


# -- live service -----------------------------------------------------------


def test_session_open_and_conservation(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    n = 1000
    for i in range(n):
        client.send_record(make_wire(i))
    assert wait_for(lambda: server.stats.records_appended >= n)
    client.close()
    assert wait_for(lambda: server.stats.markers >= 2)
    records = [
        r
        for r in server.log.snapshot()
        if r.channel == ChannelTag.BATTERY_STATUS
    ]
    assert len(records) == n
    # No reordering: arrival order == seq order == sent order.
    levels = [r.payload.level for r in records]
    assert levels == [round((i % 100) / 100, 2) for i in range(n)]
    seqs = [r.seq for r in records]
    assert seqs == list(range(seqs[0], seqs[0] + n))  # contiguous, in order


def test_acks_every_32_records(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    for i in range(100):
        client.send_record(make_wire(i))
    assert wait_for(lambda: server.stats.records_appended >= 100)
    replies = client.drain_replies()
    acks = [seq for rtype, seq in replies if rtype == REPLY_ACK]
    assert len(acks) == 3  # after 32, 64, 96
    assert acks == sorted(acks)
    client.close()


def test_version_mismatch_rejected(server):
    sock = socket.create_connection(server.address, timeout=5)
    sock.sendall(encode_hello("pepper-01", "Pepper", schema_version=2))
    reply = sock.recv(2)
    assert reply == bytes([REPLY_NAK, NAK_VERSION_MISMATCH])
    sock.close()
    assert wait_for(lambda: server.stats.sessions_rejected == 1)
    assert server.stats.sessions_opened == 0


def test_malformed_hello_rejected(server):
    sock = socket.create_connection(server.address, timeout=5)
    sock.sendall(b"\x99\x98\x97")
    sock.shutdown(socket.SHUT_WR)
    reply = sock.recv(2)
    assert reply[0] == REPLY_NAK
    assert reply[1] == NAK_MALFORMED_HELLO
    sock.close()
    assert wait_for(lambda: server.stats.sessions_rejected == 1)


def test_malformed_frame_keeps_prefix(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    k = 17
    for i in range(k):
        client.send_record(make_wire(i))
    client.send_raw(b"\xde\xad\xbe\xef\xff")  # unknown frame type
    assert wait_for(lambda: server.stats.protocol_errors >= 1)
    assert wait_for(lambda: server.stats.records_appended >= k)
    battery = [
        r for r in server.log.snapshot() if r.channel == ChannelTag.BATTERY_STATUS
    ]
    assert len(battery) == k  # exactly k: prefix kept, nothing else
    client.close()


def test_disconnect_reconnect_produces_one_marker_pair(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    client.send_record(make_wire(0))
    assert wait_for(lambda: server.stats.records_appended >= 1)
    client.close()
    assert wait_for(lambda: server.stats.markers >= 2)  # open + close
    time.sleep(0.05)
    client2 = IngestClient(*server.address, robot_id="pepper-01")
    client2.send_record(make_wire(1))
    assert wait_for(lambda: server.stats.markers >= 3)  # reopen
    assert wait_for(lambda: server.stats.records_appended >= 2)
    client2.close()
    assert wait_for(lambda: server.stats.markers >= 4)

    markers = [
        r.payload.hub_session_up
        for r in server.log.snapshot()
        if r.channel == ChannelTag.CONNECTIVITY_STATUS
    ]
    # up (open), down (gap start), up (gap end), down (final close).
    assert markers == [True, False, True, False]


def test_gap_recoverable_from_markers_alone(server, tmp_path):
    client = IngestClient(*server.address, robot_id="pepper-01")
    client.send_record(make_wire(0))
    assert wait_for(lambda: server.stats.records_appended >= 1)
    client.close()
    assert wait_for(lambda: server.stats.markers >= 2)
    gap_start = time.monotonic()
    time.sleep(0.3)
    client2 = IngestClient(*server.address, robot_id="pepper-01")
    client2.send_record(make_wire(1))
    assert wait_for(lambda: server.stats.markers >= 3)
    gap_end = time.monotonic()
    client2.close()

    from ebb.extraction import detect_gaps

    records = server.log.snapshot()
    gaps = detect_gaps(records, "session-markers", min_gap_ns=100 * 10**6)
    assert len(gaps) == 1
    measured = gaps[0].duration_ns / 1e9
    assert 0.2 <= measured <= (gap_end - gap_start) + 0.5


def test_heartbeats_update_session_not_log(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    for i in range(5):
        client.send_heartbeat(i * 10**9)
    client.send_record(make_wire(0))
    assert wait_for(lambda: server.stats.records_appended >= 1)
    client.close()
    assert wait_for(lambda: server.stats.markers >= 2)
    battery = [
        r for r in server.log.snapshot() if r.channel == ChannelTag.BATTERY_STATUS
    ]
    assert len(battery) == 1


def test_backpressure_slow_disk_loses_nothing(tmp_path):
    log = RingLog.create(tmp_path, BIG_POLICY)
    slow_append = log.append

    def delayed(payload, t_mono_ns, t_wall_ms):
        time.sleep(0.002)  # simulated slow disk
        return slow_append(payload, t_mono_ns, t_wall_ms)

    log.append = delayed
    srv = IngestServer(log, host="127.0.0.1", port=0, heartbeat_ms=5000, queue_size=16)
    srv.start()
    try:
        client = IngestClient(*srv.address, robot_id="pepper-01")
        n = 600
        sent = []

        def pump():
            for i in range(n):
                client.send_record(make_wire(i))
                sent.append(i)

        thread = threading.Thread(target=pump)
        thread.start()
        thread.join(timeout=30)
        assert not thread.is_alive()
        assert wait_for(lambda: srv.stats.records_appended >= n, timeout=30)
        client.close()
    finally:
        srv.stop()
        log.close()
    battery = [r for r in read_log(tmp_path).records if r.channel == ChannelTag.BATTERY_STATUS]
    assert len(battery) == n
    levels = [r.payload.level for r in battery]
    assert levels == [round((i % 100) / 100, 2) for i in range(n)]


def test_server_assigns_arrival_mono_and_keeps_robot_wall(server):
    client = IngestClient(*server.address, robot_id="pepper-01")
    wire = WireRecord(
        t_mono_ns=5,  # absurd robot clock
        t_wall_ms=1_654_321_000_123,
        payload=SpeechText("spoken", "hello"),
    )
    client.send_record(wire)
    assert wait_for(lambda: server.stats.records_appended >= 1)
    client.close()
    rec = [r for r in server.log.snapshot() if r.channel == ChannelTag.SPEECH_TEXT][0]
    assert rec.t_wall_ms == 1_654_321_000_123  # robot-claimed wall kept
    assert rec.t_mono_ns > 10**6  # server arrival clock, not the claim


def test_ebbd_daemon_end_to_end(tmp_path):
    """Spawn the real daemon, stream records over TCP, shut down cleanly."""
    import subprocess

    log_dir = tmp_path / "daemon-log"
    # Use the console script so the installed entry point is what runs.
    proc = subprocess.Popen(
        [
            "ebbd",
            "--listen",
            "127.0.0.1:7891",
            "--log-dir",
            str(log_dir),
            "--max-bytes",
            str(8 << 20),
            "--max-duration",
            "3600",
            "--heartbeat-ms",
            "200",
            "--sync-mode",
            "always",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        assert "listening" in line, line
        client = IngestClient("127.0.0.1", 7891, robot_id="pepper-01")
        for i in range(40):
            client.send_record(make_wire(i))
        acks = []
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and not acks:
            acks = [s for t, s in client.drain_replies() if t == REPLY_ACK]
        assert acks, "expected an ACK after 32 records"
        client.close()
        time.sleep(0.3)
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    recovered = read_log(log_dir)
    battery = [r for r in recovered.records if r.channel == ChannelTag.BATTERY_STATUS]
    assert len(battery) == 40
    markers = [
        r for r in recovered.records if r.channel == ChannelTag.CONNECTIVITY_STATUS
    ]
    assert len(markers) >= 2  # session open + close
