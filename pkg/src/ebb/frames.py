"""Frame encoding: record header, CRC-32, and SHA-256 integrity chain.

Frame layout (little-endian, bit-exact):

    magic      1B   0xEB
    version    1B   = 1
    seq        8B   u64
    t_mono_ns  8B   u64
    t_wall_ms  8B   i64
    channel    1B
    payload_len 4B  u32
    payload    payload_len B
    crc32      4B   CRC-32 of all preceding frame bytes
    chain_hash 32B  SHA-256(prev_chain || frame bytes through crc32)

The first record of a log chains from the 32-byte all-zero genesis value.
"""

from __future__ import annotations

import hashlib
import struct
import zlib

from .records import ChannelTag, EbbRecord, pack_payload, unpack_payload

FRAME_MAGIC = 0xEB
FORMAT_VERSION = 1
GENESIS_CHAIN = b"\x00" * 32
CHAIN_LEN = 32

DEFAULT_MAX_PAYLOAD = 1 << 20  # 1 MiB

_HEADER = struct.Struct("<BBQQqBI")
HEADER_LEN = _HEADER.size  # 31
CRC_LEN = 4
FRAME_OVERHEAD = HEADER_LEN + CRC_LEN + CHAIN_LEN  # 67


class FrameError(ValueError):
    """Base class for frame encode/decode failures."""

    code = "frame-error"


class OversizeError(FrameError):
    code = "oversize"


class TruncatedError(FrameError):
    code = "truncated"


class BadMagicError(FrameError):
    code = "bad-magic"


class BadVersionError(FrameError):
    code = "bad-version"


class BadCrcError(FrameError):
    code = "bad-crc"


class BadChainError(FrameError):
    code = "bad-chain"


def frame_size(payload_len: int) -> int:
    return FRAME_OVERHEAD + payload_len


def chain_hash(prev_chain: bytes, frame_through_crc: bytes) -> bytes:
    return hashlib.sha256(prev_chain + frame_through_crc).digest()


def encode_record(
    record: EbbRecord,
    prev_chain: bytes,
    max_payload_len: int = DEFAULT_MAX_PAYLOAD,
) -> bytes:
    """Encode a record into one frame chained onto prev_chain."""
    record.validate()
    if len(prev_chain) != CHAIN_LEN:
        raise ValueError(f"prev_chain must be {CHAIN_LEN} bytes")
    payload = pack_payload(record.payload)
    if len(payload) > max_payload_len:
        raise OversizeError(
            f"payload {len(payload)} bytes exceeds limit {max_payload_len}"
        )
    head = _HEADER.pack(
        FRAME_MAGIC,
        FORMAT_VERSION,
        record.seq,
        record.t_mono_ns,
        record.t_wall_ms,
        int(record.channel),
        len(payload),
    )
    body = head + payload
    body += struct.pack("<I", zlib.crc32(body))
    return body + chain_hash(prev_chain, body)


def decode_frame(
    buf: bytes,
    prev_chain: bytes,
    offset: int = 0,
    max_payload_len: int = DEFAULT_MAX_PAYLOAD,
) -> tuple[EbbRecord, int, bytes]:
    """Decode one frame at offset, verifying magic, version, CRC and chain.

    Returns (record, end_offset, chain_hash). Raises the typed error for
    the first check that fails; arbitrary input bytes are acceptable.
    """
    if offset + HEADER_LEN > len(buf):
        raise TruncatedError("frame header truncated")
    magic, version, seq, t_mono_ns, t_wall_ms, channel, payload_len = (
        _HEADER.unpack_from(buf, offset)
    )
    if magic != FRAME_MAGIC:
        raise BadMagicError(f"bad frame magic 0x{magic:02x}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"unknown format version {version}")
    if payload_len > max_payload_len:
        raise TruncatedError(f"implausible payload length {payload_len}")
    end = offset + frame_size(payload_len)
    if end > len(buf):
        raise TruncatedError("frame body truncated")
    crc_at = offset + HEADER_LEN + payload_len
    (stored_crc,) = struct.unpack_from("<I", buf, crc_at)
    if zlib.crc32(buf[offset:crc_at]) != stored_crc:
        raise BadCrcError(f"CRC mismatch at seq {seq}")
    this_chain = bytes(buf[crc_at + CRC_LEN : end])
    if chain_hash(prev_chain, buf[offset : crc_at + CRC_LEN]) != this_chain:
        raise BadChainError(f"chain hash mismatch at seq {seq}")
    payload = unpack_payload(channel, bytes(buf[offset + HEADER_LEN : crc_at]))
    record = EbbRecord(seq, t_mono_ns, t_wall_ms, ChannelTag(channel), payload)
    return record, end, this_chain
