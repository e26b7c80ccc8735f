"""Append-only recording engine over segmented ring files.

Exactly one writer owns a log directory at a time (flock on LOCK);
readers open the committed files independently. Retention evicts whole
segments, oldest first, keeping total bytes under max_bytes after every
append and dropping segments whose newest record has aged out of
max_duration_ns. Eviction is crash-safe: the manifest (oldest index +
chain anchor) is renamed into place before old files are unlinked.
"""

from __future__ import annotations

import fcntl
import hashlib
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .frames import encode_record
from .records import ChannelPayload, EbbRecord
from .segments import (
    BLOB_DIR,
    LOCK_NAME,
    Manifest,
    RecoveredLog,
    SEGMENT_DIR,
    SEGMENT_HEADER_LEN,
    SegmentView,
    list_segment_files,
    open_or_recover,
    pack_segment_header,
    segment_filename,
    write_manifest,
)

DEFAULT_SEGMENT_BYTES = 1 << 20


class RecorderError(RuntimeError):
    pass


class ClockRegressionError(RecorderError):
    """Monotonic timestamp moved backwards."""


class StorageFullError(RecorderError):
    """A single record is larger than the whole ring."""


class WriterLockedError(RecorderError):
    """Another writer holds the log's LOCK file."""


@dataclass(frozen=True)
class RetentionPolicy:
    max_bytes: int
    max_duration_ns: int
    segment_bytes: int = DEFAULT_SEGMENT_BYTES

    def validate(self) -> None:
        if self.segment_bytes <= SEGMENT_HEADER_LEN:
            raise ValueError("segment_bytes must exceed the segment header size")
        if self.max_bytes < 2 * self.segment_bytes:
            raise ValueError("max_bytes must be at least 2 x segment_bytes")
        if self.max_duration_ns <= 0:
            raise ValueError("max_duration_ns must be positive")


@dataclass(frozen=True)
class SyncMode:
    """always: fsync each append; batched: fsync every n records or t ms."""

    always: bool = False
    batch_records: int = 32
    batch_ms: int = 250

    @classmethod
    def always_sync(cls) -> "SyncMode":
        return cls(always=True)

    @classmethod
    def batched(cls, records: int = 32, ms: int = 250) -> "SyncMode":
        return cls(always=False, batch_records=records, batch_ms=ms)


class RingLog:
    """Single-writer segmented ring log."""

    def __init__(
        self,
        directory: str | Path,
        recovered: RecoveredLog,
        sync_mode: SyncMode,
    ):
        self.directory = Path(directory)
        self.manifest = recovered.manifest
        self.policy = RetentionPolicy(
            self.manifest.max_bytes,
            self.manifest.max_duration_ns,
            self.manifest.segment_bytes,
        )
        self.recovery_report = recovered.report
        self._segments: list[SegmentView] = list(recovered.segments)
        self._next_seq = recovered.next_seq
        self._last_chain = recovered.last_chain
        self._last_t_mono = max(
            (s.last_t_mono for s in self._segments if s.last_t_mono is not None),
            default=None,
        )
        self._sync_mode = sync_mode
        self._fh = None
        self._lock_fh = None
        self._unsynced = 0
        self._last_sync = time.monotonic()
        self._acquire_lock()
        self._discard_dead_files()
        self._reopen_tail()

    # -- construction ---------------------------------------------------

    @classmethod
    def create(
        cls,
        directory: str | Path,
        policy: RetentionPolicy,
        robot_id: str = "unknown",
        model: str = "unknown",
        sync_mode: SyncMode | None = None,
    ) -> "RingLog":
        policy.validate()
        directory = Path(directory)
        (directory / SEGMENT_DIR).mkdir(parents=True, exist_ok=True)
        (directory / BLOB_DIR).mkdir(parents=True, exist_ok=True)
        manifest = Manifest(
            robot_id=robot_id,
            model=model,
            max_bytes=policy.max_bytes,
            max_duration_ns=policy.max_duration_ns,
            segment_bytes=policy.segment_bytes,
        )
        write_manifest(directory, manifest)
        return cls.open(directory, sync_mode=sync_mode)

    @classmethod
    def open(
        cls, directory: str | Path, sync_mode: SyncMode | None = None
    ) -> "RingLog":
        recovered = open_or_recover(directory)
        return cls(directory, recovered, sync_mode or SyncMode.batched())

    def _acquire_lock(self) -> None:
        lock_path = self.directory / LOCK_NAME
        fh = open(lock_path, "a+")
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise WriterLockedError(f"another writer holds {lock_path}") from None
        self._lock_fh = fh

    def _discard_dead_files(self) -> None:
        # Drop evicted leftovers and anything recovery refused to chain;
        # stale files past the live tail would poison the next recovery.
        live = {seg.index for seg in self._segments}
        for index, path in list_segment_files(self.directory):
            if index not in live:
                try:
                    os.unlink(path)
                except FileNotFoundError:
                    pass

    def _reopen_tail(self) -> None:
        # Resume appending into the newest segment, truncating any torn tail.
        if self._segments:
            tail = self._segments[-1]
            self._fh = open(tail.path, "r+b")
            self._fh.truncate(tail.byte_size)
            self._fh.seek(tail.byte_size)

    # -- properties ------------------------------------------------------

    @property
    def next_seq(self) -> int:
        return self._next_seq

    @property
    def last_chain_hash(self) -> bytes:
        return self._last_chain

    @property
    def segments(self) -> list[SegmentView]:
        return list(self._segments)

    @property
    def total_bytes(self) -> int:
        return sum(s.byte_size for s in self._segments)

    @property
    def record_count(self) -> int:
        return sum(len(s.records) for s in self._segments)

    # -- appending ---------------------------------------------------------

    def append(
        self, payload: ChannelPayload, t_mono_ns: int, t_wall_ms: int
    ) -> int:
        """Append one record; returns its seq.

        Rolls to a fresh segment when the current one is full, then
        evicts whole segments oldest-first until both retention bounds
        hold again.
        """
        if self._last_t_mono is not None and t_mono_ns < self._last_t_mono:
            raise ClockRegressionError(
                f"t_mono_ns {t_mono_ns} < last {self._last_t_mono}"
            )
        record = EbbRecord(
            self._next_seq, t_mono_ns, t_wall_ms, payload.channel, payload
        )
        frame = encode_record(record, self._last_chain)
        if SEGMENT_HEADER_LEN + len(frame) > self.policy.max_bytes:
            raise StorageFullError(
                f"single record of {len(frame)} bytes cannot fit a "
                f"{self.policy.max_bytes}-byte ring"
            )

        seg = self._segments[-1] if self._segments else None
        if seg is None or (
            seg.records and seg.byte_size + len(frame) > self.policy.segment_bytes
        ):
            seg = self._roll_segment(record)
            self._fh.write(frame)
        else:
            self._fh.write(frame)
        seg.records.append(record)
        chain = hashlib.sha256(self._last_chain + frame[:-32]).digest()
        seg.chains.append(chain)
        seg.frame_offsets.append(seg.byte_size)
        seg.byte_size += len(frame)

        self._last_chain = chain
        self._last_t_mono = t_mono_ns
        self._next_seq += 1
        self._unsynced += 1
        self._evict()
        self._maybe_sync()
        return record.seq

    def _roll_segment(self, first_record: EbbRecord) -> SegmentView:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
        index = self._segments[-1].index + 1 if self._segments else (
            self.manifest.oldest_segment_index
        )
        path = self.directory / SEGMENT_DIR / segment_filename(index)
        header = pack_segment_header(
            index, first_record.seq, first_record.t_wall_ms
        )
        self._fh = open(path, "wb")
        self._fh.write(header)
        seg = SegmentView(index, first_record.seq, first_record.t_wall_ms, path)
        self._segments.append(seg)
        return seg

    def _evict(self) -> None:
        evicted = False
        while len(self._segments) > 1 and self.total_bytes > self.policy.max_bytes:
            self._evict_oldest()
            evicted = True
        cutoff = None
        if self._last_t_mono is not None:
            cutoff = self._last_t_mono - self.policy.max_duration_ns
        while (
            cutoff is not None
            and len(self._segments) > 1
            and self._segments[0].last_t_mono is not None
            and self._segments[0].last_t_mono < cutoff
        ):
            self._evict_oldest()
            evicted = True
        if evicted:
            write_manifest(self.directory, self.manifest)

    def _evict_oldest(self) -> None:
        seg = self._segments[0]
        # Manifest first: recovery drops files below oldest_segment_index,
        # so a crash between these two steps loses nothing.
        self.manifest.oldest_segment_index = seg.index + 1
        self.manifest.chain_anchor = seg.last_chain or self.manifest.chain_anchor
        self._segments.pop(0)
        try:
            os.unlink(seg.path)
        except FileNotFoundError:
            pass

    def _maybe_sync(self) -> None:
        if self._sync_mode.always:
            self.sync()
            return
        if self._unsynced >= self._sync_mode.batch_records:
            self.sync()
        elif (
            self._unsynced
            and (time.monotonic() - self._last_sync) * 1000 >= self._sync_mode.batch_ms
        ):
            self.sync()
        elif self._fh is not None:
            self._fh.flush()  # visible to reader processes, not yet durable

    def sync(self) -> None:
        """Make all appended frames durable against process crash."""
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
        self._unsynced = 0
        self._last_sync = time.monotonic()

    def close(self) -> None:
        if self._fh is not None:
            self.sync()
            self._fh.close()
            self._fh = None
        if self._lock_fh is not None:
            fcntl.flock(self._lock_fh.fileno(), fcntl.LOCK_UN)
            self._lock_fh.close()
            self._lock_fh = None

    def __enter__(self) -> "RingLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- reading -----------------------------------------------------------

    def snapshot(
        self, from_t_mono_ns: int | None = None, to_t_mono_ns: int | None = None
    ) -> list[EbbRecord]:
        """Committed records with t_mono_ns in [from, to], seq-ordered."""
        if (
            from_t_mono_ns is not None
            and to_t_mono_ns is not None
            and from_t_mono_ns > to_t_mono_ns
        ):
            raise ValueError("snapshot range is inverted")
        out = []
        for seg in self._segments:
            for rec in seg.records:
                if from_t_mono_ns is not None and rec.t_mono_ns < from_t_mono_ns:
                    continue
                if to_t_mono_ns is not None and rec.t_mono_ns > to_t_mono_ns:
                    continue
                out.append(rec)
        return out

    # -- blobs ---------------------------------------------------------------

    def store_blob(self, data: bytes) -> bytes:
        """Store an opaque blob content-addressed; returns its digest."""
        digest = hashlib.sha256(data).digest()
        path = self.directory / BLOB_DIR / digest.hex()
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return digest


def read_log(directory: str | Path) -> RecoveredLog:
    """Read-only view of a log's committed records; takes no lock."""
    return open_or_recover(directory)


def blob_path(directory: str | Path, digest: bytes) -> Path:
    return Path(directory) / BLOB_DIR / digest.hex()


def make_payload_digest(*parts: str) -> bytes:
    """Deterministic 32-byte digest for DecisionEvent.inputs_digest."""
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


__all__ = [
    "ClockRegressionError",
    "RecorderError",
    "RetentionPolicy",
    "RingLog",
    "StorageFullError",
    "SyncMode",
    "WriterLockedError",
    "blob_path",
    "make_payload_digest",
    "read_log",
]
