"""Independent reference implementations used as test oracles.

Everything here re-derives behaviour from first principles (struct,
hashlib, plain lists) without calling into the package's codecs, so a
bug in the implementation cannot hide in its own oracle.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


FRAME_HEADER = struct.Struct("<BBQQqBI")
SEG_HEADER = struct.Struct("<8sQQq")


@dataclass
class RefFrame:
    seq: int
    t_mono_ns: int
    t_wall_ms: int
    channel: int
    payload: bytes
    crc_ok: bool
    chain_ok: bool
    chain: bytes


def parse_segment_bytes(data: bytes, prev_chain: bytes) -> tuple[dict, list[RefFrame], int]:
    """Parse one segment file from raw bytes, checking CRC and chain."""
    magic, index, base_seq, created_wall_ms = SEG_HEADER.unpack_from(data, 0)
    header = {
        "magic": magic,
        "index": index,
        "base_seq": base_seq,
        "created_wall_ms": created_wall_ms,
    }
    frames = []
    offset = SEG_HEADER.size
    chain = prev_chain
    while offset + FRAME_HEADER.size <= len(data):
        fmagic, version, seq, t_mono, t_wall, channel, plen = FRAME_HEADER.unpack_from(
            data, offset
        )
        if fmagic != 0xEB or version != 1:
            break
        end = offset + FRAME_HEADER.size + plen + 4 + 32
        if end > len(data):
            break
        body_end = offset + FRAME_HEADER.size + plen
        payload = data[offset + FRAME_HEADER.size : body_end]
        (crc,) = struct.unpack_from("<I", data, body_end)
        crc_ok = zlib.crc32(data[offset:body_end]) == crc
        stored_chain = data[body_end + 4 : end]
        expect_chain = sha256(chain + data[offset : body_end + 4])
        chain_ok = stored_chain == expect_chain
        frames.append(
            RefFrame(seq, t_mono, t_wall, channel, payload, crc_ok, chain_ok, stored_chain)
        )
        if not (crc_ok and chain_ok):
            break
        chain = stored_chain
        offset = end
    return header, frames, offset


@dataclass
class _OracleSegment:
    entries: list[tuple[int, int, int]] = field(default_factory=list)  # (seq, t, size)
    byte_size: int = 32  # segment header

    @property
    def last_t(self) -> int:
        return self.entries[-1][1]


class RingOracle:
    """In-memory bounded-deque model of segmented ring retention.

    Mirrors the contract: roll to a new segment when a frame will not
    fit a non-empty segment; after each append evict whole oldest
    segments while total bytes exceed max_bytes, then while the oldest
    segment's newest record is strictly older than newest - duration.
    The newest segment is never evicted.
    """

    def __init__(self, max_bytes: int, max_duration_ns: int, segment_bytes: int):
        self.max_bytes = max_bytes
        self.max_duration_ns = max_duration_ns
        self.segment_bytes = segment_bytes
        self.segments: list[_OracleSegment] = []
        self.newest_t: int | None = None

    def append(self, seq: int, t_mono_ns: int, frame_size: int) -> None:
        if not self.segments or (
            self.segments[-1].entries
            and self.segments[-1].byte_size + frame_size > self.segment_bytes
        ):
            self.segments.append(_OracleSegment())
        seg = self.segments[-1]
        seg.entries.append((seq, t_mono_ns, frame_size))
        seg.byte_size += frame_size
        self.newest_t = t_mono_ns
        while len(self.segments) > 1 and self.total_bytes() > self.max_bytes:
            self.segments.pop(0)
        cutoff = self.newest_t - self.max_duration_ns
        while len(self.segments) > 1 and self.segments[0].last_t < cutoff:
            self.segments.pop(0)

    def total_bytes(self) -> int:
        return sum(s.byte_size for s in self.segments)

    def surviving_seqs(self) -> list[int]:
        return [seq for seg in self.segments for seq, _, _ in seg.entries]


def brute_force_hub_gaps(
    samples: list[tuple[int, bool]], last_record_t: int, min_gap_ns: int
) -> list[tuple[int, int]]:
    """Reference hub-down intervals from (t_mono_ns, hub_up) samples."""
    gaps = []
    down_at = None
    for t, up in samples:
        if not up and down_at is None:
            down_at = t
        elif up and down_at is not None:
            gaps.append((down_at, t))
            down_at = None
    if down_at is not None and last_record_t > down_at:
        gaps.append((down_at, last_record_t))
    return [(a, b) for a, b in gaps if b - a > min_gap_ns]


def brute_force_spacing_gaps(
    times: list[int], min_gap_ns: int
) -> list[tuple[int, int]]:
    return [
        (a, b) for a, b in zip(times, times[1:]) if b - a > min_gap_ns
    ]
