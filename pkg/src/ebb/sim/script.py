"""Scenario scripts: the deterministic world description for a run.

A script is a plain JSON document (version field required) describing
the resident's timeline, the robot's behaviour parameters, the smart
home, and the scripted failures. Remedies and fault injections never
mutate a script in place; they produce edited copies.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

SCRIPT_VERSION = 1

LOUDNESS_RANGE_FACTOR = {"normal": 3.0, "weak": 1.0}


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class CallForHelp:
    t: float
    loudness: str = "weak"  # "normal" | "weak"
    duration_s: float = 2.0


@dataclass(frozen=True)
class TouchAction:
    t: float
    widget: str
    x: int = 0
    y: int = 0


@dataclass
class ResidentPlan:
    # Piecewise-linear position: [t, x, y] sorted by t.
    waypoints: list[list[float]] = field(default_factory=lambda: [[0.0, 0.0, 0.0]])
    climb_times: list[float] = field(default_factory=list)
    fall_t: float | None = None
    calls: list[CallForHelp] = field(default_factory=list)
    touches: list[TouchAction] = field(default_factory=list)


@dataclass
class RobotPlan:
    patrol_waypoints: list[list[float]] = field(
        default_factory=lambda: [[2.0, 2.0], [4.0, 2.0]]
    )
    start_pos: list[float] = field(default_factory=lambda: [2.0, 2.0])
    speed_mps: float = 0.5
    audible_range_m: float = 2.0
    follow_distance_m: float = 1.5
    force_follow: bool = False
    backup_comms: bool = False
    hub_direct_emergency_call: bool = False
    maintenance_alert_mode: bool = False
    help_request_period_s: float = 120.0


@dataclass
class ScenarioScript:
    duration_s: float
    epoch_wall_ms: int
    resident: ResidentPlan
    robot: RobotPlan
    version: int = SCRIPT_VERSION
    tick_ms: int = 100
    bracelet_worn: bool = False
    bracelet_trigger_delay_s: float = 10.0
    hub_outages: list[list[float]] = field(default_factory=list)
    sensor_degradation_onset_s: float | None = None
    degradation_severity: float = 1.0
    cleaner_visit: list[float] | None = None
    smart_sensors_fall_detection: bool = True
    direct_sensor_feed: bool = False
    speech_recognizer_ok: bool = True
    sensor_noise_scale: float = 0.0
    battery_start: float = 0.9
    battery_drain_per_s: float = 2e-5

    def validate(self) -> None:
        if self.version != SCRIPT_VERSION:
            raise ScriptError(f"unsupported script version {self.version}")
        if self.duration_s <= 0:
            raise ScriptError("duration_s must be positive")
        if self.tick_ms <= 0:
            raise ScriptError("tick_ms must be positive")
        if self.robot.audible_range_m <= 0:
            raise ScriptError("audible_range_m must be positive")
        if self.robot.speed_mps <= 0:
            raise ScriptError("robot speed must be positive")
        for interval in self.hub_outages:
            if len(interval) != 2 or not 0 <= interval[0] < interval[1]:
                raise ScriptError(f"bad hub outage interval {interval}")
            if interval[0] > self.duration_s:
                raise ScriptError(f"hub outage {interval} starts past the end")
        times = [wp[0] for wp in self.resident.waypoints]
        if times != sorted(times):
            raise ScriptError("resident waypoints must be sorted by time")
        if not self.resident.waypoints:
            raise ScriptError("resident needs at least one waypoint")
        for call in self.resident.calls:
            if call.loudness not in LOUDNESS_RANGE_FACTOR:
                raise ScriptError(f"unknown loudness {call.loudness!r}")
        if self.resident.fall_t is not None and not (
            0 <= self.resident.fall_t <= self.duration_s
        ):
            raise ScriptError("fall_t outside the scenario")
        if not 0 <= self.battery_start <= 1:
            raise ScriptError("battery_start outside [0, 1]")

    def copy(self) -> "ScenarioScript":
        return copy.deepcopy(self)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioScript":
        if not isinstance(doc, dict) or "version" not in doc:
            raise ScriptError("script document must carry a version field")
        try:
            resident_doc = dict(doc.get("resident") or {})
            resident = ResidentPlan(
                waypoints=[list(map(float, wp)) for wp in resident_doc.get("waypoints", [[0, 0, 0]])],
                climb_times=[float(t) for t in resident_doc.get("climb_times", [])],
                fall_t=resident_doc.get("fall_t"),
                calls=[CallForHelp(**c) for c in resident_doc.get("calls", [])],
                touches=[TouchAction(**t) for t in resident_doc.get("touches", [])],
            )
            robot = RobotPlan(**(doc.get("robot") or {}))
            fields = {
                k: v
                for k, v in doc.items()
                if k not in ("resident", "robot")
            }
            script = cls(resident=resident, robot=robot, **fields)
        except (TypeError, ValueError) as exc:
            raise ScriptError(f"malformed script: {exc}") from None
        script.validate()
        return script

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioScript":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScriptError(f"cannot read script {path}: {exc}") from None
        return cls.from_json(doc)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))


# -- remedies ---------------------------------------------------------------

REMEDY_KINDS = (
    "BackupComms",
    "WifiFailureMaintenanceAlert",
    "HubDirectEmergencyCall",
    "ImprovedMicRange",
    "BraceletReminder",
    "NoDisinfectant",
)

DEFAULT_IMPROVED_MIC_RANGE_M = 6.0


@dataclass(frozen=True)
class Remedy:
    """One of the six prioritized recommendations, as a script toggle."""

    kind: str
    new_range_m: float | None = None  # ImprovedMicRange only

    def __post_init__(self):
        if self.kind not in REMEDY_KINDS:
            raise ScriptError(f"unknown remedy {self.kind!r}")

    def apply(self, script: ScenarioScript) -> ScenarioScript:
        out = script.copy()
        if self.kind == "BackupComms":
            out.robot.backup_comms = True
        elif self.kind == "WifiFailureMaintenanceAlert":
            out.robot.maintenance_alert_mode = True
        elif self.kind == "HubDirectEmergencyCall":
            out.robot.hub_direct_emergency_call = True
        elif self.kind == "ImprovedMicRange":
            out.robot.audible_range_m = self.new_range_m or DEFAULT_IMPROVED_MIC_RANGE_M
        elif self.kind == "BraceletReminder":
            # The daily reminder works: the resident wears the bracelet.
            out.bracelet_worn = True
        elif self.kind == "NoDisinfectant":
            out.sensor_degradation_onset_s = None
        return out

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.new_range_m is not None:
            doc["new_range_m"] = self.new_range_m
        return doc

    @classmethod
    def from_json(cls, doc: dict | str) -> "Remedy":
        if isinstance(doc, str):
            return parse_remedy(doc)
        return cls(kind=doc["kind"], new_range_m=doc.get("new_range_m"))


def parse_remedy(text: str) -> Remedy:
    """Parse 'BackupComms' or 'ImprovedMicRange:4.5' style names."""
    if ":" in text:
        kind, arg = text.split(":", 1)
        if kind != "ImprovedMicRange":
            raise ScriptError(f"remedy {kind!r} takes no parameter")
        return Remedy(kind=kind, new_range_m=float(arg))
    return Remedy(kind=text)


def apply_remedies(
    script: ScenarioScript, remedies: tuple[Remedy, ...] | list[Remedy]
) -> ScenarioScript:
    out = script
    for remedy in sorted(remedies, key=lambda r: r.kind):
        out = remedy.apply(out)
    return out


# -- fault injections ---------------------------------------------------------

FAULT_KINDS = (
    "hub_outage",
    "sensor_noise",
    "bracelet_absent",
    "speech_recognizer_outage",
)


@dataclass(frozen=True)
class FaultInjection:
    """A scripted failure toggle; applying one twice equals applying it once."""

    kind: str
    scale: float = 1.0  # sensor_noise only
    outage: tuple[float, float] | None = None  # hub_outage only

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ScriptError(f"unknown fault {self.kind!r}")


def apply_fault(script: ScenarioScript, fault: FaultInjection) -> ScenarioScript:
    out = script.copy()
    if fault.kind == "hub_outage":
        interval = list(fault.outage) if fault.outage else [0.0, out.duration_s]
        if interval not in out.hub_outages:
            out.hub_outages.append(interval)
            out.hub_outages.sort()
    elif fault.kind == "sensor_noise":
        out.sensor_noise_scale = fault.scale
    elif fault.kind == "bracelet_absent":
        out.bracelet_worn = False
    elif fault.kind == "speech_recognizer_outage":
        out.speech_recognizer_ok = False
    return out
