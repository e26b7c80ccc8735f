"""Telemetry ingestion over a stream socket.

Wire protocol v1. A connection opens with HELLO:

    magic "EBBP" 4B . version 1B (=1) . robot_id (4B len + UTF-8)
    . model (4B len + UTF-8) . schema_version 2B

then carries frames of: type 1B . payload length 4B . payload. Types:
0x01 RECORD (payload = t_mono_ns 8B . t_wall_ms 8B . channel 1B .
payload_len 4B . channel payload -- a log frame body without seq/chain,
which the service assigns) and 0x02 HEARTBEAT (8B robot t_mono_ns).
The service replies 0x06 ACK + last assigned seq (8B) every 32 records,
and 0x15 NAK + reason byte when it rejects a HELLO.

Records are appended in arrival order with the service's own clock in
the frame header (the recorder's monotonic clock orders arrivals even
when the robot's clock is skewed); the robot-claimed wall timestamp is
kept as the record's t_wall_ms so log rows still line up with witness
time. Session transitions are logged as ConnectivityStatus marker
records, one down/up pair bracketing every transport gap.
"""

from __future__ import annotations

import logging
import queue
import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass

from .frames import DEFAULT_MAX_PAYLOAD
from .records import ChannelPayload, ConnectivityStatus, unpack_payload
from .recorder import RingLog

logger = logging.getLogger(__name__)

HELLO_MAGIC = b"EBBP"
PROTOCOL_VERSION = 1
SUPPORTED_SCHEMA = 1

FRAME_RECORD = 0x01
FRAME_HEARTBEAT = 0x02
REPLY_ACK = 0x06
REPLY_NAK = 0x15

NAK_VERSION_MISMATCH = 1
NAK_MALFORMED_HELLO = 2

ACK_EVERY = 32
_NO_SEQ = 0xFFFFFFFFFFFFFFFF

_RECORD_BODY_HEAD = struct.Struct("<QqBI")


class ProtocolError(ValueError):
    pass


class MalformedHello(ProtocolError):
    reason = NAK_MALFORMED_HELLO


class VersionMismatch(ProtocolError):
    reason = NAK_VERSION_MISMATCH


@dataclass
class Session:
    robot_id: str
    model: str
    schema_version: int
    negotiated_at_wall_ms: int
    last_heartbeat_t_mono_ns: int = 0


@dataclass(frozen=True)
class WireRecord:
    """One RECORD frame as sent by the robot (timestamps are claimed)."""

    t_mono_ns: int
    t_wall_ms: int
    payload: ChannelPayload


def encode_hello(robot_id: str, model: str, schema_version: int = 1) -> bytes:
    rid = robot_id.encode("utf-8")
    mdl = model.encode("utf-8")
    return (
        HELLO_MAGIC
        + bytes([PROTOCOL_VERSION])
        + struct.pack("<I", len(rid))
        + rid
        + struct.pack("<I", len(mdl))
        + mdl
        + struct.pack("<H", schema_version)
    )


def encode_record_frame(wire: WireRecord) -> bytes:
    payload = wire.payload.pack()
    body = (
        _RECORD_BODY_HEAD.pack(
            wire.t_mono_ns, wire.t_wall_ms, int(wire.payload.channel), len(payload)
        )
        + payload
    )
    return bytes([FRAME_RECORD]) + struct.pack("<I", len(body)) + body


def encode_heartbeat(t_mono_ns: int) -> bytes:
    body = struct.pack("<Q", t_mono_ns)
    return bytes([FRAME_HEARTBEAT]) + struct.pack("<I", len(body)) + body


def decode_record_body(body: bytes) -> WireRecord:
    if len(body) < _RECORD_BODY_HEAD.size:
        raise ProtocolError("record body truncated")
    t_mono_ns, t_wall_ms, channel, payload_len = _RECORD_BODY_HEAD.unpack_from(body, 0)
    if len(body) != _RECORD_BODY_HEAD.size + payload_len:
        raise ProtocolError("record body length mismatch")
    payload = unpack_payload(channel, body[_RECORD_BODY_HEAD.size :])
    return WireRecord(t_mono_ns, t_wall_ms, payload)


class StreamParser:
    """Incremental frame parser, independent of any socket.

    feed() returns the complete (frame_type, body) messages parsed so
    far; partial frames wait for more bytes. Garbage sets .error after
    yielding everything that preceded it, so a malformed frame at
    position k still delivers exactly k messages.
    """

    def __init__(self, max_body: int = DEFAULT_MAX_PAYLOAD + 64):
        self._buf = bytearray()
        self._max_body = max_body
        self.error: ProtocolError | None = None

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        out: list[tuple[int, bytes]] = []
        if self.error is not None:
            return out
        self._buf += data
        while True:
            if len(self._buf) < 5:
                return out
            ftype = self._buf[0]
            (length,) = struct.unpack_from("<I", self._buf, 1)
            if ftype not in (FRAME_RECORD, FRAME_HEARTBEAT):
                self.error = ProtocolError(f"unknown frame type 0x{ftype:02x}")
                return out
            if length > self._max_body:
                self.error = ProtocolError(f"frame body of {length} bytes too large")
                return out
            if len(self._buf) < 5 + length:
                return out
            body = bytes(self._buf[5 : 5 + length])
            del self._buf[: 5 + length]
            out.append((ftype, body))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def parse_hello(data: bytes) -> Session:
    """Parse a HELLO blob. Raises MalformedHello / VersionMismatch."""
    if len(data) < 5 or data[:4] != HELLO_MAGIC:
        raise MalformedHello("bad hello magic")
    if data[4] != PROTOCOL_VERSION:
        raise VersionMismatch(f"protocol version {data[4]}")
    pos = 5

    def text() -> str:
        nonlocal pos
        if pos + 4 > len(data):
            raise MalformedHello("hello truncated")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise MalformedHello("hello truncated")
        try:
            value = data[pos : pos + n].decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedHello("hello text not UTF-8") from None
        pos += n
        return value

    robot_id = text()
    model = text()
    if pos + 2 != len(data):
        raise MalformedHello("hello length mismatch")
    (schema,) = struct.unpack_from("<H", data, pos)
    if schema != SUPPORTED_SCHEMA:
        raise VersionMismatch(f"schema version {schema}")
    return Session(robot_id, model, schema, int(time.time() * 1000))


def read_hello(sock: socket.socket) -> Session:
    """Read and validate a HELLO directly off a socket."""
    head = _read_exact(sock, 5)
    if head is None or head[:4] != HELLO_MAGIC:
        raise MalformedHello("bad hello magic")
    if head[4] != PROTOCOL_VERSION:
        raise VersionMismatch(f"protocol version {head[4]}")
    parts = bytearray(head)

    def take(n: int) -> bytes:
        chunk = _read_exact(sock, n)
        if chunk is None:
            raise MalformedHello("hello truncated")
        parts.extend(chunk)
        return chunk

    for _ in range(2):  # robot_id, model
        (n,) = struct.unpack("<I", take(4))
        if n > 4096:
            raise MalformedHello("hello text too long")
        take(n)
    take(2)
    return parse_hello(bytes(parts))


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except (ConnectionError, socket.timeout, OSError):
            return None
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


@dataclass
class _QueueItem:
    kind: str  # "record" | "open" | "close"
    wire: WireRecord | None = None
    sock: socket.socket | None = None
    count_in_session: int = 0
    arrival_mono_ns: int = 0
    arrival_wall_ms: int = 0


@dataclass
class IngestStats:
    sessions_opened: int = 0
    sessions_rejected: int = 0
    records_appended: int = 0
    protocol_errors: int = 0
    markers: int = 0


class IngestServer:
    """Accepts robot connections and appends their records to one RingLog.

    One handler thread per connection; all appends funnel through a
    bounded queue into a single writer thread, so arrival order is
    preserved and a slow disk stalls the sender instead of dropping
    records.
    """

    def __init__(
        self,
        log: RingLog,
        host: str = "127.0.0.1",
        port: int = 0,
        heartbeat_ms: int = 1000,
        queue_size: int = 256,
    ):
        self.log = log
        self.heartbeat_ms = heartbeat_ms
        self.stats = IngestStats()
        self._queue: queue.Queue[_QueueItem | None] = queue.Queue(maxsize=queue_size)
        self._writer = threading.Thread(target=self._writer_loop, daemon=True)
        self._session_up = False
        self._lock = threading.Lock()
        server = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self) -> None:
                server._handle_connection(self.request)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._tcp = Server((host, port), Handler)
        self._serve_thread = threading.Thread(
            target=self._tcp.serve_forever, daemon=True
        )

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> None:
        self._writer.start()
        self._serve_thread.start()
        logger.info("ingest listening on %s:%d", *self.address)

    def stop(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()
        self._queue.put(None)
        self._writer.join(timeout=10)
        self.log.sync()

    # -- connection handling ----------------------------------------------

    def _handle_connection(self, sock: socket.socket) -> None:
        sock.settimeout(max(self.heartbeat_ms * 3 / 1000.0, 0.2))
        try:
            session = read_hello(sock)
        except ProtocolError as exc:
            self.stats.sessions_rejected += 1
            logger.warning("rejected hello: %s", exc)
            try:
                sock.sendall(bytes([REPLY_NAK, getattr(exc, "reason", 0)]))
            except OSError:
                pass
            return
        self.stats.sessions_opened += 1
        logger.info("session open: %s (%s)", session.robot_id, session.model)
        self._enqueue(_QueueItem(kind="open", sock=sock))
        parser = StreamParser()
        appended = 0
        try:
            while True:
                try:
                    data = sock.recv(65536)
                except socket.timeout:
                    logger.info("session timed out: %s", session.robot_id)
                    break
                except (ConnectionError, OSError):
                    break
                if not data:
                    break
                messages = parser.feed(data)
                stop = False
                for ftype, body in messages:
                    if ftype == FRAME_HEARTBEAT:
                        if len(body) == 8:
                            (session.last_heartbeat_t_mono_ns,) = struct.unpack(
                                "<Q", body
                            )
                        continue
                    try:
                        wire = decode_record_body(body)
                    except (ProtocolError, ValueError) as exc:
                        self.stats.protocol_errors += 1
                        logger.warning("bad record body, terminating: %s", exc)
                        stop = True
                        break
                    appended += 1
                    self._enqueue(
                        _QueueItem(
                            kind="record",
                            wire=wire,
                            sock=sock,
                            count_in_session=appended,
                        )
                    )
                if stop:
                    break
                if parser.error is not None:
                    self.stats.protocol_errors += 1
                    logger.warning(
                        "protocol error, terminating session: %s", parser.error
                    )
                    break
        finally:
            self._enqueue(_QueueItem(kind="close"))
            try:
                sock.close()
            except OSError:
                pass

    def _enqueue(self, item: _QueueItem) -> None:
        item.arrival_mono_ns = time.monotonic_ns()
        item.arrival_wall_ms = int(time.time() * 1000)
        self._queue.put(item)  # blocks when full: backpressure via TCP

    # -- writer thread -----------------------------------------------------

    def _writer_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            try:
                self._apply(item)
            except Exception:
                logger.exception("writer failed; continuing")

    def _apply(self, item: _QueueItem) -> None:
        if item.kind == "record":
            seq = self.log.append(
                item.wire.payload, item.arrival_mono_ns, item.wire.t_wall_ms
            )
            self.stats.records_appended += 1
            if item.count_in_session % ACK_EVERY == 0 and item.sock is not None:
                try:
                    item.sock.sendall(
                        bytes([REPLY_ACK]) + struct.pack("<Q", seq)
                    )
                except OSError:
                    pass
            return
        up = item.kind == "open"
        with self._lock:
            was_up = self._session_up
            self._session_up = up
        if up == was_up:
            return  # no transition: e.g. close after a rejected hello
        marker = ConnectivityStatus(wifi_up=up, internet_up=up, hub_session_up=up)
        self.log.append(marker, item.arrival_mono_ns, item.arrival_wall_ms)
        self.stats.markers += 1
        self.log.sync()  # gap evidence must survive whatever follows


class IngestClient:
    """Minimal robot-side sender, used by tests and the demo tooling."""

    def __init__(self, host: str, port: int, robot_id: str, model: str = "Pepper"):
        self.sock = socket.create_connection((host, port), timeout=10)
        self.sock.sendall(encode_hello(robot_id, model))
        self._acks: list[int] = []

    def send_record(self, wire: WireRecord) -> None:
        self.sock.sendall(encode_record_frame(wire))

    def send_heartbeat(self, t_mono_ns: int) -> None:
        self.sock.sendall(encode_heartbeat(t_mono_ns))

    def send_raw(self, data: bytes) -> None:
        self.sock.sendall(data)

    def drain_replies(self, timeout: float = 0.2) -> list[tuple[int, int]]:
        """Collect (reply_type, value) pairs currently readable."""
        out = []
        self.sock.settimeout(timeout)
        buf = b""
        try:
            while True:
                chunk = self.sock.recv(4096)
                if not chunk:
                    break
                buf += chunk
        except (socket.timeout, OSError):
            pass
        pos = 0
        while pos < len(buf):
            rtype = buf[pos]
            if rtype == REPLY_ACK and pos + 9 <= len(buf):
                (seq,) = struct.unpack_from("<Q", buf, pos + 1)
                out.append((rtype, seq))
                pos += 9
            elif rtype == REPLY_NAK and pos + 2 <= len(buf):
                out.append((rtype, buf[pos + 1]))
                pos += 2
            else:
                break
        return out

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass
