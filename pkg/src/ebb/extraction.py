"""Investigator-facing queries over a recovered log.

CSV rows are `seq,t_mono_ns,t_wall_utc,channel,summary,payload_json`
with t_wall_utc in ISO-8601 UTC at millisecond precision. The payload
column is canonical JSON (sorted keys, no spaces) so identical log
bytes always export byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .records import (
    ActuatorCommand,
    AudioSample,
    BatteryStatus,
    ChannelTag,
    ConnectivityStatus,
    DecisionEvent,
    EbbRecord,
    PositionEstimate,
    SenseSample,
    SpeechText,
    TouchEvent,
    payload_fields,
)
from .segments import (
    IntegrityReport,
    RecoveredLog,
    open_or_recover,
    verify_chain,
)

CSV_COLUMNS = ["seq", "t_mono_ns", "t_wall_utc", "channel", "summary", "payload_json"]

SESSION_MARKERS = "session-markers"


def wall_ms_to_iso(t_wall_ms: int) -> str:
    secs, ms = divmod(t_wall_ms, 1000)
    stamp = datetime.fromtimestamp(secs, tz=timezone.utc)
    return stamp.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms:03d}Z"


def iso_to_wall_ms(text: str) -> int:
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    stamp = datetime.fromisoformat(cleaned)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return int(stamp.timestamp() * 1000)


def summarize(record: EbbRecord) -> str:
    p = record.payload
    if isinstance(p, SenseSample):
        return f"sense {p.sensor_id} {p.blob_len}B"
    if isinstance(p, AudioSample):
        return f"audio {p.mic_id} {p.blob_len}B"
    if isinstance(p, SpeechText):
        text = p.text if len(p.text) <= 80 else p.text[:77] + "..."
        return f"{p.direction}: {text}"
    if isinstance(p, TouchEvent):
        return f"touch {p.widget} @({p.screen_x},{p.screen_y})"
    if isinstance(p, ActuatorCommand):
        return f"{p.joint_id} demand={p.demand:.3f} pos={p.sampled_position:.3f}"
    if isinstance(p, DecisionEvent):
        desc = p.description if len(p.description) <= 60 else p.description[:57] + "..."
        return f"decision {p.decision_id}: {desc}"
    if isinstance(p, BatteryStatus):
        return f"battery {p.level:.2f}"
    if isinstance(p, ConnectivityStatus):
        def updown(flag: bool) -> str:
            return "up" if flag else "down"

        return (
            f"wifi={updown(p.wifi_up)} net={updown(p.internet_up)} "
            f"hub={updown(p.hub_session_up)}"
        )
    if isinstance(p, PositionEstimate):
        return f"pos ({p.x:.2f},{p.y:.2f}) {p.source}"
    return type(p).__name__


def record_row(record: EbbRecord) -> dict[str, object]:
    return {
        "seq": record.seq,
        "t_mono_ns": record.t_mono_ns,
        "t_wall_utc": wall_ms_to_iso(record.t_wall_ms),
        "channel": record.channel.wire_name,
        "summary": summarize(record),
        "payload_json": json.dumps(
            payload_fields(record.payload), sort_keys=True, separators=(",", ":")
        ),
    }


def select_records(
    records: list[EbbRecord],
    from_wall_ms: int | None = None,
    to_wall_ms: int | None = None,
    channel: ChannelTag | None = None,
) -> list[EbbRecord]:
    out = []
    for rec in records:
        if from_wall_ms is not None and rec.t_wall_ms < from_wall_ms:
            continue
        if to_wall_ms is not None and rec.t_wall_ms > to_wall_ms:
            continue
        if channel is not None and rec.channel != channel:
            continue
        out.append(rec)
    return out


def export_csv(
    records: list[EbbRecord],
    from_wall_ms: int | None = None,
    to_wall_ms: int | None = None,
    channel: ChannelTag | None = None,
) -> str:
    """One CSV row per selected record; header-only when nothing matches."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in select_records(records, from_wall_ms, to_wall_ms, channel):
        writer.writerow(record_row(rec))
    return buf.getvalue()


@dataclass(frozen=True)
class GapInterval:
    channel: str
    start_t_mono_ns: int
    end_t_mono_ns: int

    @property
    def duration_ns(self) -> int:
        return self.end_t_mono_ns - self.start_t_mono_ns

    def to_json(self) -> dict:
        return {
            "channel": self.channel,
            "start_t_mono_ns": self.start_t_mono_ns,
            "end_t_mono_ns": self.end_t_mono_ns,
            "duration_ns": self.duration_ns,
        }


def detect_gaps(
    records: list[EbbRecord],
    channel: str,
    min_gap_ns: int,
) -> list[GapInterval]:
    """Maximal coverage gaps for one channel, sorted and non-overlapping.

    For ConnectivityStatus (alias: session-markers) a gap is a maximal
    run where hub_session_up is false, ending at the next up record (or
    the log's last record when the hub never came back). For any other
    channel a gap is an inter-record spacing strictly greater than
    min_gap_ns. Gaps of exactly min_gap_ns are not reported.
    """
    if min_gap_ns <= 0:
        raise ValueError("min_gap_ns must be positive")
    if channel == SESSION_MARKERS:
        tag = ChannelTag.CONNECTIVITY_STATUS
        name = SESSION_MARKERS
    else:
        tag = ChannelTag.from_name(channel)
        name = channel
    chan_records = [r for r in records if r.channel == tag]
    gaps: list[GapInterval] = []
    if tag == ChannelTag.CONNECTIVITY_STATUS:
        down_since: int | None = None
        for rec in chan_records:
            up = rec.payload.hub_session_up
            if not up and down_since is None:
                down_since = rec.t_mono_ns
            elif up and down_since is not None:
                gaps.append(GapInterval(name, down_since, rec.t_mono_ns))
                down_since = None
        if down_since is not None and records:
            tail_end = records[-1].t_mono_ns
            if tail_end > down_since:
                gaps.append(GapInterval(name, down_since, tail_end))
    else:
        for prev, nxt in zip(chan_records, chan_records[1:]):
            if nxt.t_mono_ns - prev.t_mono_ns > min_gap_ns:
                gaps.append(GapInterval(name, prev.t_mono_ns, nxt.t_mono_ns))
    return [g for g in gaps if g.duration_ns > min_gap_ns]


@dataclass(frozen=True)
class ExpectationSpec:
    """Something that should appear in the log: a pure record predicate.

    trigger: {"channel": name, "equals": {field: value}, "contains":
    {field: substring}}; window bounds are wall-clock ms, optional.
    """

    name: str
    trigger: dict
    from_wall_ms: int | None = None
    to_wall_ms: int | None = None
    required: bool = True

    @classmethod
    def from_json(cls, doc: dict) -> "ExpectationSpec":
        window = doc.get("window") or {}
        return cls(
            name=doc["name"],
            trigger=doc["trigger"],
            from_wall_ms=window.get("from_wall_ms"),
            to_wall_ms=window.get("to_wall_ms"),
            required=bool(doc.get("required", True)),
        )

    def to_json(self) -> dict:
        doc: dict = {"name": self.name, "trigger": self.trigger, "required": self.required}
        if self.from_wall_ms is not None or self.to_wall_ms is not None:
            doc["window"] = {
                "from_wall_ms": self.from_wall_ms,
                "to_wall_ms": self.to_wall_ms,
            }
        return doc

    def matches(self, record: EbbRecord) -> bool:
        if self.from_wall_ms is not None and record.t_wall_ms < self.from_wall_ms:
            return False
        if self.to_wall_ms is not None and record.t_wall_ms > self.to_wall_ms:
            return False
        want_channel = self.trigger.get("channel")
        if want_channel and record.channel.wire_name != want_channel:
            return False
        fields = payload_fields(record.payload)
        for key, value in (self.trigger.get("equals") or {}).items():
            if fields.get(key) != value:
                return False
        for key, sub in (self.trigger.get("contains") or {}).items():
            hay = fields.get(key)
            if not isinstance(hay, str) or sub not in hay:
                return False
        return True


@dataclass(frozen=True)
class UneventFinding:
    spec_name: str
    satisfied: bool
    required: bool
    witnesses: tuple[int, ...]  # matching seqs

    def to_json(self) -> dict:
        return {
            "spec": self.spec_name,
            "satisfied": self.satisfied,
            "required": self.required,
            "witnesses": list(self.witnesses),
        }


def scan_unevents(
    records: list[EbbRecord], specs: list[ExpectationSpec]
) -> list[UneventFinding]:
    """For each spec: satisfied iff some record matches; witnesses = seqs."""
    out = []
    for spec in specs:
        witnesses = tuple(r.seq for r in records if spec.matches(r))
        out.append(UneventFinding(spec.name, bool(witnesses), spec.required, witnesses))
    return out


@dataclass
class LogReport:
    integrity: IntegrityReport
    recovery: dict
    record_count: int

    @property
    def ok(self) -> bool:
        # A torn tail is a crash artifact, not an integrity failure.
        return self.integrity.ok and not self.recovery.get("corrupt", False)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "integrity": self.integrity.to_json(),
            "recovery": self.recovery,
            "record_count": self.record_count,
        }

    def to_text(self) -> str:
        lines = [f"log integrity: {'OK' if self.ok else 'FAILED'}"]
        lines.append(f"records: {self.record_count}")
        if not self.integrity.ok:
            lines.append(f"first bad seq: {self.integrity.first_bad_seq}")
            lines.append(f"detail: {self.integrity.detail}")
        if self.recovery.get("torn_frames"):
            lines.append(
                f"warning: {self.recovery['torn_frames']} torn frame(s), "
                f"{self.recovery['dropped_bytes']} byte(s) dropped at the tail"
            )
        for note in self.recovery.get("notes", []):
            lines.append(f"note: {note}")
        return "\n".join(lines)


def integrity_report(log_dir: str | Path) -> LogReport:
    recovered = open_or_recover(log_dir)
    integrity = verify_chain(log_dir)
    return LogReport(
        integrity=integrity,
        recovery=recovered.report.to_json(),
        record_count=recovered.record_count,
    )


def load_specs(path: str | Path) -> list[ExpectationSpec]:
    doc = json.loads(Path(path).read_text())
    items = doc if isinstance(doc, list) else doc.get("specs", [])
    return [ExpectationSpec.from_json(item) for item in items]


def records_of(log: RecoveredLog | list[EbbRecord]) -> list[EbbRecord]:
    if isinstance(log, RecoveredLog):
        return log.records
    return log


_PAYLOAD_TYPES = {
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

_DIGEST_FIELDS = ("blob_digest", "inputs_digest")


def records_from_csv(text: str) -> list[EbbRecord]:
    """Rebuild records from an export; all scalar fields are lossless,
    so gap detection and unevent scans run on the CSV alone."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        tag = ChannelTag.from_name(row["channel"])
        fields = json.loads(row["payload_json"])
        for key in _DIGEST_FIELDS:
            if key in fields:
                fields[key] = bytes.fromhex(fields[key])
        payload = _PAYLOAD_TYPES[tag](**fields)
        out.append(
            EbbRecord(
                seq=int(row["seq"]),
                t_mono_ns=int(row["t_mono_ns"]),
                t_wall_ms=iso_to_wall_ms(row["t_wall_utc"]),
                channel=tag,
                payload=payload,
            )
        )
    return out
