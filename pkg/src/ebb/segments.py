"""Segmented on-disk layout, crash recovery, and full-chain verification.

Log directory layout:

    manifest.json            policy, format version, robot identity,
                             oldest live segment index + chain anchor
    segments/NNNNNNNN.ebbseg one segment per file, ordered by index
    blobs/<hex digest>       opaque sense/audio payload blobs
    LOCK                     writer exclusivity

Segment file = 32-byte header followed by frames:

    magic           8B  "EBBSEG01"
    segment_index   8B  u64
    base_seq        8B  u64  (seq of the first frame)
    created_wall_ms 8B  i64  (must equal the first frame's t_wall_ms)

Frames inside a segment carry contiguous seqs starting at base_seq, and
the chain continues across segment boundaries. The manifest's chain
anchor is the chain hash of the last evicted frame (genesis initially),
so the retained window stays verifiable after old segments are dropped.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .frames import (
    BadVersionError,
    FrameError,
    GENESIS_CHAIN,
    TruncatedError,
    decode_frame,
)
from .records import EbbRecord

SEGMENT_MAGIC = b"EBBSEG01"
_SEG_HEADER = struct.Struct("<8sQQq")
SEGMENT_HEADER_LEN = _SEG_HEADER.size  # 32

MANIFEST_NAME = "manifest.json"
SEGMENT_DIR = "segments"
BLOB_DIR = "blobs"
LOCK_NAME = "LOCK"
MANIFEST_FORMAT_VERSION = 1


class LogFormatError(ValueError):
    """Log directory or segment file is not readable as an EBB log."""


def segment_filename(index: int) -> str:
    return f"{index:08d}.ebbseg"


def pack_segment_header(index: int, base_seq: int, created_wall_ms: int) -> bytes:
    return _SEG_HEADER.pack(SEGMENT_MAGIC, index, base_seq, created_wall_ms)


def unpack_segment_header(buf: bytes) -> tuple[int, int, int]:
    if len(buf) < SEGMENT_HEADER_LEN:
        raise LogFormatError("segment header truncated")
    magic, index, base_seq, created_wall_ms = _SEG_HEADER.unpack_from(buf, 0)
    if magic != SEGMENT_MAGIC:
        raise LogFormatError(f"bad segment magic {magic!r}")
    return index, base_seq, created_wall_ms


@dataclass
class Manifest:
    robot_id: str = "unknown"
    model: str = "unknown"
    format_version: int = MANIFEST_FORMAT_VERSION
    max_bytes: int = 64 << 20
    max_duration_ns: int = 24 * 3600 * 10**9
    segment_bytes: int = 1 << 20
    oldest_segment_index: int = 0
    chain_anchor: bytes = GENESIS_CHAIN

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "robot_id": self.robot_id,
            "model": self.model,
            "policy": {
                "max_bytes": self.max_bytes,
                "max_duration_ns": self.max_duration_ns,
                "segment_bytes": self.segment_bytes,
            },
            "oldest_segment_index": self.oldest_segment_index,
            "chain_anchor": self.chain_anchor.hex(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Manifest":
        if doc.get("format_version") != MANIFEST_FORMAT_VERSION:
            raise LogFormatError(
                f"unknown log format version {doc.get('format_version')!r}"
            )
        policy = doc.get("policy", {})
        return cls(
            robot_id=doc.get("robot_id", "unknown"),
            model=doc.get("model", "unknown"),
            max_bytes=int(policy["max_bytes"]),
            max_duration_ns=int(policy["max_duration_ns"]),
            segment_bytes=int(policy["segment_bytes"]),
            oldest_segment_index=int(doc.get("oldest_segment_index", 0)),
            chain_anchor=bytes.fromhex(doc["chain_anchor"]),
        )


def write_manifest(log_dir: Path, manifest: Manifest) -> None:
    # Temp-then-rename keeps the manifest whole across crashes.
    path = log_dir / MANIFEST_NAME
    tmp = log_dir / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True))
    os.replace(tmp, path)


def read_manifest(log_dir: Path) -> Manifest:
    path = Path(log_dir) / MANIFEST_NAME
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise LogFormatError(f"no manifest at {path}") from None
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LogFormatError(f"unreadable manifest {path}: {exc}") from None
    try:
        return Manifest.from_json(doc)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, LogFormatError):
            raise
        raise LogFormatError(f"malformed manifest {path}: {exc}") from None


@dataclass
class SegmentView:
    """One recovered segment: header fields plus its decoded frames."""

    index: int
    base_seq: int
    created_wall_ms: int
    path: Path
    records: list[EbbRecord] = field(default_factory=list)
    chains: list[bytes] = field(default_factory=list)  # chain hash per record
    frame_offsets: list[int] = field(default_factory=list)
    byte_size: int = SEGMENT_HEADER_LEN  # committed bytes incl. header

    @property
    def last_chain(self) -> bytes | None:
        return self.chains[-1] if self.chains else None

    @property
    def first_t_mono(self) -> int | None:
        return self.records[0].t_mono_ns if self.records else None

    @property
    def last_t_mono(self) -> int | None:
        return self.records[-1].t_mono_ns if self.records else None


@dataclass
class RecoveryReport:
    """What recovery dropped or flagged while opening a log."""

    torn_frames: int = 0
    dropped_bytes: int = 0
    corrupt: bool = False
    skipped_segments: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (self.torn_frames or self.dropped_bytes or self.corrupt)

    def to_json(self) -> dict:
        return {
            "clean": self.clean,
            "torn_frames": self.torn_frames,
            "dropped_bytes": self.dropped_bytes,
            "corrupt": self.corrupt,
            "skipped_segments": self.skipped_segments,
            "notes": self.notes,
        }


@dataclass
class RecoveredLog:
    """All fully committed state of a log directory after recovery."""

    directory: Path
    manifest: Manifest
    segments: list[SegmentView]
    report: RecoveryReport

    @property
    def records(self) -> list[EbbRecord]:
        return [rec for seg in self.segments for rec in seg.records]

    @property
    def record_count(self) -> int:
        return sum(len(seg.records) for seg in self.segments)

    @property
    def last_chain(self) -> bytes:
        for seg in reversed(self.segments):
            if seg.chains:
                return seg.chains[-1]
        return self.manifest.chain_anchor

    @property
    def next_seq(self) -> int:
        for seg in reversed(self.segments):
            if seg.records:
                return seg.records[-1].seq + 1
        return 0


def _scan_segment(
    path: Path,
    expected_index: int,
    prev_chain: bytes,
    next_seq: int | None,
    report: RecoveryReport,
) -> tuple[SegmentView | None, bool]:
    """Scan one segment file, keeping the longest valid frame prefix.

    Returns (segment, complete). complete is False when any tail bytes
    were dropped, in which case later segments cannot chain. next_seq
    is None for the oldest live segment, whose base_seq is adopted.
    """
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise LogFormatError(f"unreadable segment {path}: {exc}") from None
    if len(data) < SEGMENT_HEADER_LEN:
        report.torn_frames += 1
        report.dropped_bytes += len(data)
        report.notes.append(f"{path.name}: torn segment header")
        return None, False
    try:
        index, base_seq, created_wall_ms = unpack_segment_header(data)
    except LogFormatError as exc:
        report.corrupt = True
        report.dropped_bytes += len(data)
        report.notes.append(f"{path.name}: {exc}")
        return None, False
    if index != expected_index:
        report.corrupt = True
        report.dropped_bytes += len(data)
        report.notes.append(
            f"{path.name}: header index {index} != expected {expected_index}"
        )
        return None, False
    if next_seq is not None and base_seq != next_seq:
        report.corrupt = True
        report.dropped_bytes += len(data)
        report.notes.append(f"{path.name}: base_seq {base_seq} != expected {next_seq}")
        return None, False

    seg = SegmentView(index, base_seq, created_wall_ms, path)
    offset = SEGMENT_HEADER_LEN
    chain = prev_chain
    seq = base_seq
    complete = True
    while offset < len(data):
        try:
            record, end, chain = decode_frame(data, chain, offset)
        except TruncatedError:
            report.torn_frames += 1
            report.dropped_bytes += len(data) - offset
            report.notes.append(f"{path.name}: torn frame at offset {offset}")
            complete = False
            break
        except (BadVersionError, FrameError) as exc:
            report.corrupt = True
            report.dropped_bytes += len(data) - offset
            report.notes.append(f"{path.name}: {type(exc).code} at offset {offset}")
            complete = False
            break
        if record.seq != seq:
            report.corrupt = True
            report.dropped_bytes += len(data) - offset
            report.notes.append(
                f"{path.name}: seq {record.seq} != expected {seq} (splice?)"
            )
            complete = False
            break
        if seg.records and record.t_mono_ns < seg.records[-1].t_mono_ns:
            report.corrupt = True
            report.dropped_bytes += len(data) - offset
            report.notes.append(f"{path.name}: t_mono regression at seq {seq}")
            complete = False
            break
        seg.records.append(record)
        seg.chains.append(chain)
        seg.frame_offsets.append(offset)
        seg.byte_size = end
        offset = end
        seq += 1
    if seg.records and seg.created_wall_ms != seg.records[0].t_wall_ms:
        report.corrupt = True
        report.notes.append(f"{path.name}: created_wall_ms does not match first record")
    return seg, complete


def list_segment_files(log_dir: Path) -> list[tuple[int, Path]]:
    seg_dir = Path(log_dir) / SEGMENT_DIR
    out = []
    if seg_dir.is_dir():
        for p in seg_dir.iterdir():
            if p.suffix == ".ebbseg" and p.stem.isdigit():
                out.append((int(p.stem), p))
    out.sort()
    return out


def open_or_recover(log_dir: str | Path) -> RecoveredLog:
    """Open a log directory, yielding every fully committed frame.

    Torn tails (mid-write crashes) are discarded and reported. Frames
    after a mid-file corruption are dropped too; the report marks the
    log corrupt in that case so callers can distinguish tamper damage
    from a clean crash. Never returns a record that fails decoding.
    """
    log_dir = Path(log_dir)
    manifest = read_manifest(log_dir)
    report = RecoveryReport()
    segments: list[SegmentView] = []
    chain = manifest.chain_anchor
    next_seq: int | None = None
    expected_index = manifest.oldest_segment_index
    damaged = False
    for index, path in list_segment_files(log_dir):
        if index < manifest.oldest_segment_index:
            # Evicted before a crash finished unlinking it.
            report.skipped_segments.append(index)
            continue
        if damaged:
            report.corrupt = True
            report.dropped_bytes += path.stat().st_size
            report.notes.append(f"{path.name}: unreachable after earlier damage")
            continue
        seg, complete = _scan_segment(path, expected_index, chain, next_seq, report)
        if seg is None:
            damaged = True
            continue
        if not complete and not seg.records:
            # Nothing valid past the header: drop the segment outright so
            # a resumed writer never inherits its stale header fields.
            damaged = True
            continue
        segments.append(seg)
        if seg.records:
            chain = seg.chains[-1]
            next_seq = seg.records[-1].seq + 1
        elif next_seq is None:
            next_seq = seg.base_seq
        expected_index = index + 1
        if not complete:
            damaged = True
    return RecoveredLog(log_dir, manifest, segments, report)


@dataclass
class IntegrityReport:
    ok: bool
    first_bad_seq: int | None = None
    detail: str = ""
    record_count: int = 0

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "first_bad_seq": self.first_bad_seq,
            "detail": self.detail,
            "record_count": self.record_count,
        }


def verify_chain(log_dir: str | Path) -> IntegrityReport:
    """Re-verify CRC, chain continuity, and seq contiguity from raw bytes.

    Works from the files rather than a recovered view so splices and
    in-place edits are caught even when recovery silently drops them.
    """
    log_dir = Path(log_dir)
    try:
        manifest = read_manifest(log_dir)
    except LogFormatError as exc:
        return IntegrityReport(ok=False, detail=str(exc))
    chain = manifest.chain_anchor
    expected_seq: int | None = None
    expected_index = manifest.oldest_segment_index
    count = 0
    files = [
        (i, p)
        for i, p in list_segment_files(log_dir)
        if i >= manifest.oldest_segment_index
    ]
    if not files:
        return IntegrityReport(ok=True, record_count=0)
    for index, path in files:
        try:
            data = path.read_bytes()
        except OSError as exc:
            return IntegrityReport(False, expected_seq, f"{path.name}: {exc}", count)
        if len(data) < SEGMENT_HEADER_LEN and index == files[-1][0]:
            break  # torn final segment header: a crash artifact, not tampering
        try:
            hdr_index, base_seq, created_wall_ms = unpack_segment_header(data)
        except LogFormatError as exc:
            return IntegrityReport(False, expected_seq, f"{path.name}: {exc}", count)
        if hdr_index != index or index != expected_index:
            return IntegrityReport(
                False,
                expected_seq,
                f"{path.name}: segment index {hdr_index} out of order",
                count,
            )
        if expected_seq is not None and base_seq != expected_seq:
            return IntegrityReport(
                False,
                expected_seq,
                f"{path.name}: base_seq {base_seq} != expected {expected_seq}",
                count,
            )
        seq = base_seq
        offset = SEGMENT_HEADER_LEN
        first_in_segment = True
        while offset < len(data):
            try:
                record, end, chain = decode_frame(data, chain, offset)
            except TruncatedError:
                if index == files[-1][0]:
                    break  # torn tail of the final segment: not a chain fault
                return IntegrityReport(
                    False, seq, f"{path.name}: truncated mid-log", count
                )
            except FrameError as exc:
                return IntegrityReport(
                    False, seq, f"{path.name}: {type(exc).code}: {exc}", count
                )
            if record.seq != seq:
                return IntegrityReport(
                    False,
                    seq,
                    f"{path.name}: seq {record.seq} where {seq} expected",
                    count,
                )
            if first_in_segment and created_wall_ms != record.t_wall_ms:
                return IntegrityReport(
                    False,
                    seq,
                    f"{path.name}: created_wall_ms mismatch",
                    count,
                )
            first_in_segment = False
            count += 1
            seq += 1
            offset = end
        expected_seq = seq
        expected_index = index + 1
    return IntegrityReport(ok=True, record_count=count)
