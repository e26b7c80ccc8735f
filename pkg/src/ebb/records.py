"""Telemetry record types and their canonical binary payload layout.

Every record carries one payload variant, identified by a channel tag.
Payload bodies are packed little-endian with the field order fixed per
variant; text fields are length-prefixed (u32) UTF-8.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from enum import IntEnum

DIGEST_LEN = 32


class ChannelTag(IntEnum):
    SENSE_SAMPLE = 1
    AUDIO_SAMPLE = 2
    SPEECH_TEXT = 3
    TOUCH_EVENT = 4
    ACTUATOR_COMMAND = 5
    DECISION_EVENT = 6
    BATTERY_STATUS = 7
    CONNECTIVITY_STATUS = 8
    POSITION_ESTIMATE = 9

    @property
    def wire_name(self) -> str:
        return _TAG_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "ChannelTag":
        try:
            return _NAME_TAGS[name]
        except KeyError:
            raise UnknownChannelError(f"unknown channel name: {name!r}") from None


_TAG_NAMES = {
    ChannelTag.SENSE_SAMPLE: "SenseSample",
    ChannelTag.AUDIO_SAMPLE: "AudioSample",
    ChannelTag.SPEECH_TEXT: "SpeechText",
    ChannelTag.TOUCH_EVENT: "TouchEvent",
    ChannelTag.ACTUATOR_COMMAND: "ActuatorCommand",
    ChannelTag.DECISION_EVENT: "DecisionEvent",
    ChannelTag.BATTERY_STATUS: "BatteryStatus",
    ChannelTag.CONNECTIVITY_STATUS: "ConnectivityStatus",
    ChannelTag.POSITION_ESTIMATE: "PositionEstimate",
}
_NAME_TAGS = {name: tag for tag, name in _TAG_NAMES.items()}


class RecordError(ValueError):
    """Invalid record or payload content."""


class PayloadDecodeError(RecordError):
    """Payload bytes do not parse as the claimed channel variant."""


class UnknownChannelError(RecordError):
    """Channel tag or name outside the closed set."""


def _pack_text(out: bytearray, value: str) -> None:
    raw = value.encode("utf-8")
    out += struct.pack("<I", len(raw))
    out += raw


class _Cursor:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise PayloadDecodeError("payload truncated")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def i32(self) -> int:
        return struct.unpack("<i", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def text(self) -> str:
        n = struct.unpack("<I", self.take(4))[0]
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PayloadDecodeError(f"invalid UTF-8 in text field: {exc}") from None

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise PayloadDecodeError(
                f"{len(self.buf) - self.pos} trailing payload bytes"
            )


def _check_digest(value: bytes, field: str) -> None:
    if not isinstance(value, (bytes, bytearray)) or len(value) != DIGEST_LEN:
        raise RecordError(f"{field} must be {DIGEST_LEN} bytes")


@dataclass(frozen=True)
class SenseSample:
    sensor_id: str
    blob_digest: bytes
    blob_len: int
    inline_summary: str

    channel = ChannelTag.SENSE_SAMPLE

    def validate(self) -> None:
        _check_digest(self.blob_digest, "blob_digest")
        if self.blob_len < 0:
            raise RecordError("blob_len must be >= 0")

    def pack(self) -> bytes:
        out = bytearray()
        _pack_text(out, self.sensor_id)
        out += self.blob_digest
        out += struct.pack("<Q", self.blob_len)
        _pack_text(out, self.inline_summary)
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "SenseSample":
        return cls(cur.text(), cur.take(DIGEST_LEN), cur.u64(), cur.text())


@dataclass(frozen=True)
class AudioSample:
    mic_id: str
    blob_digest: bytes
    blob_len: int

    channel = ChannelTag.AUDIO_SAMPLE

    def validate(self) -> None:
        _check_digest(self.blob_digest, "blob_digest")
        if self.blob_len < 0:
            raise RecordError("blob_len must be >= 0")

    def pack(self) -> bytes:
        out = bytearray()
        _pack_text(out, self.mic_id)
        out += self.blob_digest
        out += struct.pack("<Q", self.blob_len)
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "AudioSample":
        return cls(cur.text(), cur.take(DIGEST_LEN), cur.u64())


_DIRECTIONS = ("heard", "spoken")


@dataclass(frozen=True)
class SpeechText:
    direction: str  # "heard" | "spoken"
    text: str

    channel = ChannelTag.SPEECH_TEXT

    def validate(self) -> None:
        if self.direction not in _DIRECTIONS:
            raise RecordError(f"direction must be one of {_DIRECTIONS}")

    def pack(self) -> bytes:
        out = bytearray([_DIRECTIONS.index(self.direction)])
        _pack_text(out, self.text)
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "SpeechText":
        code = cur.u8()
        if code >= len(_DIRECTIONS):
            raise PayloadDecodeError(f"bad direction code {code}")
        return cls(_DIRECTIONS[code], cur.text())


@dataclass(frozen=True)
class TouchEvent:
    screen_x: int
    screen_y: int
    widget: str

    channel = ChannelTag.TOUCH_EVENT

    def validate(self) -> None:
        pass

    def pack(self) -> bytes:
        out = bytearray(struct.pack("<ii", self.screen_x, self.screen_y))
        _pack_text(out, self.widget)
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "TouchEvent":
        return cls(cur.i32(), cur.i32(), cur.text())


@dataclass(frozen=True)
class ActuatorCommand:
    joint_id: str
    demand: float
    sampled_position: float  # radians

    channel = ChannelTag.ACTUATOR_COMMAND

    def validate(self) -> None:
        pass

    def pack(self) -> bytes:
        out = bytearray()
        _pack_text(out, self.joint_id)
        out += struct.pack("<dd", self.demand, self.sampled_position)
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "ActuatorCommand":
        return cls(cur.text(), cur.f64(), cur.f64())


@dataclass(frozen=True)
class DecisionEvent:
    decision_id: str
    description: str
    inputs_digest: bytes

    channel = ChannelTag.DECISION_EVENT

    def validate(self) -> None:
        _check_digest(self.inputs_digest, "inputs_digest")

    def pack(self) -> bytes:
        out = bytearray()
        _pack_text(out, self.decision_id)
        _pack_text(out, self.description)
        out += self.inputs_digest
        return bytes(out)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "DecisionEvent":
        return cls(cur.text(), cur.text(), cur.take(DIGEST_LEN))


@dataclass(frozen=True)
class BatteryStatus:
    level: float  # fraction in [0, 1]

    channel = ChannelTag.BATTERY_STATUS

    def validate(self) -> None:
        if not 0.0 <= self.level <= 1.0:
            raise RecordError(f"battery level {self.level} outside [0, 1]")

    def pack(self) -> bytes:
        return struct.pack("<d", self.level)

    @classmethod
    def unpack(cls, cur: _Cursor) -> "BatteryStatus":
        return cls(cur.f64())


@dataclass(frozen=True)
class ConnectivityStatus:
    wifi_up: bool
    internet_up: bool
    hub_session_up: bool

    channel = ChannelTag.CONNECTIVITY_STATUS

    def validate(self) -> None:
        pass

    def pack(self) -> bytes:
        return bytes(
            [int(self.wifi_up), int(self.internet_up), int(self.hub_session_up)]
        )

    @classmethod
    def unpack(cls, cur: _Cursor) -> "ConnectivityStatus":
        def flag() -> bool:
            v = cur.u8()
            if v > 1:
                raise PayloadDecodeError(f"bad boolean byte {v}")
            return bool(v)

        return cls(flag(), flag(), flag())


_POSITION_SOURCES = ("tracking", "odometry")


@dataclass(frozen=True)
class PositionEstimate:
    x: float  # metres
    y: float
    source: str  # "tracking" | "odometry"

    channel = ChannelTag.POSITION_ESTIMATE

    def validate(self) -> None:
        if self.source not in _POSITION_SOURCES:
            raise RecordError(f"source must be one of {_POSITION_SOURCES}")

    def pack(self) -> bytes:
        return struct.pack("<dd", self.x, self.y) + bytes(
            [_POSITION_SOURCES.index(self.source)]
        )

    @classmethod
    def unpack(cls, cur: _Cursor) -> "PositionEstimate":
        x, y = cur.f64(), cur.f64()
        code = cur.u8()
        if code >= len(_POSITION_SOURCES):
            raise PayloadDecodeError(f"bad position source code {code}")
        return cls(x, y, _POSITION_SOURCES[code])


ChannelPayload = (
    SenseSample
    | AudioSample
    | SpeechText
    | TouchEvent
    | ActuatorCommand
    | DecisionEvent
    | BatteryStatus
    | ConnectivityStatus
    | PositionEstimate
)

_PAYLOAD_TYPES: dict[ChannelTag, type] = {
    ChannelTag.SENSE_SAMPLE: SenseSample,
    ChannelTag.AUDIO_SAMPLE: AudioSample,
    ChannelTag.SPEECH_TEXT: SpeechText,
    ChannelTag.TOUCH_EVENT: TouchEvent,
    ChannelTag.ACTUATOR_COMMAND: ActuatorCommand,
    ChannelTag.DECISION_EVENT: DecisionEvent,
    ChannelTag.BATTERY_STATUS: BatteryStatus,
    ChannelTag.CONNECTIVITY_STATUS: ConnectivityStatus,
    ChannelTag.POSITION_ESTIMATE: PositionEstimate,
}


def pack_payload(payload: ChannelPayload) -> bytes:
    payload.validate()
    return payload.pack()


def unpack_payload(channel: int, data: bytes) -> ChannelPayload:
    try:
        tag = ChannelTag(channel)
    except ValueError:
        raise UnknownChannelError(f"unknown channel tag {channel}") from None
    cur = _Cursor(data)
    payload = _PAYLOAD_TYPES[tag].unpack(cur)
    cur.done()
    payload.validate()
    return payload


def payload_fields(payload: ChannelPayload) -> dict[str, object]:
    """Payload as JSON-safe scalars; digests become lowercase hex."""
    out: dict[str, object] = {}
    for f in fields(payload):
        value = getattr(payload, f.name)
        if isinstance(value, (bytes, bytearray)):
            value = bytes(value).hex()
        out[f.name] = value
    return out


@dataclass(frozen=True)
class EbbRecord:
    """One committed telemetry record.

    seq increases by exactly 1 across a log; t_mono_ns never decreases
    with seq; the payload variant must match the channel tag.
    """

    seq: int
    t_mono_ns: int
    t_wall_ms: int
    channel: ChannelTag
    payload: ChannelPayload

    def validate(self) -> None:
        if self.seq < 0:
            raise RecordError("seq must be non-negative")
        if self.t_mono_ns < 0:
            raise RecordError("t_mono_ns must be non-negative")
        if self.payload.channel != self.channel:
            raise RecordError(
                f"payload variant {type(self.payload).__name__} does not match "
                f"channel {self.channel.wire_name}"
            )
        self.payload.validate()
