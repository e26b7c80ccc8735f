"""Deterministic discrete-event simulation of an assisted-living flat.

One run steps a fixed 100 ms tick over the scripted world: the resident
moves (and may climb, fall, and call for help), the robot follows when
it has localization data and patrols otherwise, the home hub drops and
restores the robot's wireless link per script, and telemetry streams
out exactly as a robot-mounted recorder would see it.

The alarm can be raised four ways: (a) the robot hears a call for help
within audible range, (b) on-robot fall detection (disabled while the
sensors are degraded), (c) the fall bracelet (worn, and either relayed
robot-side while the hub link is up or answered by the hub's own
emergency line when fitted), and (d) smart-home sensor data delivered
over the hub link. Routes (a), (b) and (d) still need an outbound
channel: the hub WiFi link, or backup comms when fitted.

Everything plot-relevant is scripted; the only randomness is sensor
noise, so identical (script, seed, remedies) give byte-identical
telemetry.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from ..records import (
    ActuatorCommand,
    AudioSample,
    BatteryStatus,
    ChannelPayload,
    ConnectivityStatus,
    DecisionEvent,
    EbbRecord,
    PositionEstimate,
    SenseSample,
    SpeechText,
    TouchEvent,
)
from ..recorder import RingLog, make_payload_digest
from .script import (
    LOUDNESS_RANGE_FACTOR,
    Remedy,
    ScenarioScript,
    apply_remedies,
)

ALARM_ROUTES = ("none", "robot_wifi", "robot_backup", "hub_landline", "bracelet")

ONBOARD_DETECT_DELAY_S = 0.5
CONNECTIVITY_PERIOD_S = 1.0
POSITION_PERIOD_S = 1.0
BATTERY_PERIOD_S = 5.0
SAMPLE_PERIOD_S = 10.0


@dataclass(frozen=True)
class TraceEvent:
    t_s: float
    kind: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"t_s": self.t_s, "kind": self.kind, "detail": self.detail}


@dataclass
class MishapOutcome:
    fall_occurred: bool
    alarm_raised: bool
    alarm_route: str
    trace: list[TraceEvent]
    observables: dict[str, bool]
    telemetry_digest: str
    record_count: int
    run_id: str

    def __post_init__(self):
        if (self.alarm_route == "none") != (not self.alarm_raised):
            raise ValueError("alarm_route must be none exactly when no alarm raised")

    def to_json(self) -> dict:
        return {
            "fall_occurred": self.fall_occurred,
            "alarm_raised": self.alarm_raised,
            "alarm_route": self.alarm_route,
            "mishaps": sorted(evaluate_mishaps(self)),
            "observables": dict(sorted(self.observables.items())),
            "telemetry_digest": self.telemetry_digest,
            "record_count": self.record_count,
            "run_id": self.run_id,
            "trace": [ev.to_json() for ev in self.trace],
        }


@dataclass
class SimResult:
    outcome: MishapOutcome
    records: list[EbbRecord]


def evaluate_mishaps(outcome: MishapOutcome) -> set[str]:
    """Accident1: the fall happened. Accident2: it happened unalarmed."""
    mishaps = set()
    if outcome.fall_occurred:
        mishaps.add("Accident1")
        if not outcome.alarm_raised:
            mishaps.add("Accident2")
    return mishaps


def _interp_position(waypoints: list[list[float]], t: float) -> tuple[float, float]:
    if t <= waypoints[0][0]:
        return waypoints[0][1], waypoints[0][2]
    for (t0, x0, y0), (t1, x1, y1) in zip(waypoints, waypoints[1:]):
        if t <= t1:
            if t1 == t0:
                return x1, y1
            a = (t - t0) / (t1 - t0)
            return x0 + a * (x1 - x0), y0 + a * (y1 - y0)
    last = waypoints[-1]
    return last[1], last[2]


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _move_toward(
    pos: tuple[float, float], target: tuple[float, float], step: float
) -> tuple[float, float]:
    d = _dist(pos, target)
    if d <= step or d == 0:
        return target
    a = step / d
    return pos[0] + a * (target[0] - pos[0]), pos[1] + a * (target[1] - pos[1])


class _Emitter:
    """Collects the telemetry stream; optionally appends to a ring log."""

    def __init__(self, script: ScenarioScript, log: RingLog | None):
        self.script = script
        self.log = log
        self.records: list[EbbRecord] = []
        self._digest = hashlib.sha256()

    def emit(self, tick: int, payload: ChannelPayload) -> None:
        t_mono_ns = tick * self.script.tick_ms * 1_000_000
        t_wall_ms = self.script.epoch_wall_ms + tick * self.script.tick_ms
        seq = len(self.records)
        if self.log is not None:
            seq = self.log.append(payload, t_mono_ns, t_wall_ms)
        self.records.append(
            EbbRecord(seq, t_mono_ns, t_wall_ms, payload.channel, payload)
        )
        body = payload.pack()
        self._digest.update(
            f"{t_mono_ns}:{t_wall_ms}:{int(payload.channel)}:".encode()
        )
        self._digest.update(body)

    def digest(self) -> str:
        return self._digest.hexdigest()


def run_id_for(
    script: ScenarioScript, seed: int, remedies: tuple[Remedy, ...]
) -> str:
    import json

    blob = json.dumps(
        {
            "script": script.to_json(),
            "seed": seed,
            "remedies": [r.to_json() for r in sorted(remedies, key=lambda r: r.kind)],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def run(
    script: ScenarioScript,
    seed: int = 0,
    remedies: tuple[Remedy, ...] | list[Remedy] = (),
    log: RingLog | None = None,
) -> SimResult:
    """Run one scenario; fully deterministic given (script, seed, remedies)."""
    script.validate()
    remedies = tuple(remedies)
    run_id = run_id_for(script, seed, remedies)
    eff = apply_remedies(script, remedies)
    rng = random.Random(seed)
    em = _Emitter(eff, log)
    trace: list[TraceEvent] = []

    tick_s = eff.tick_ms / 1000.0
    n_ticks = int(round(eff.duration_s * 1000)) // eff.tick_ms
    conn_ticks = max(1, int(CONNECTIVITY_PERIOD_S * 1000) // eff.tick_ms)
    pos_ticks = max(1, int(POSITION_PERIOD_S * 1000) // eff.tick_ms)
    battery_ticks = max(1, int(BATTERY_PERIOD_S * 1000) // eff.tick_ms)
    sample_ticks = max(1, int(SAMPLE_PERIOD_S * 1000) // eff.tick_ms)
    robot = eff.robot
    resident = eff.resident
    fall_t = resident.fall_t

    def hub_link_up(t: float) -> bool:
        return not any(start <= t < end for start, end in eff.hub_outages)

    def data_link(t: float) -> bool:
        return hub_link_up(t) or robot.backup_comms or eff.direct_sensor_feed

    def note(t: float, kind: str, detail: str = "") -> None:
        trace.append(TraceEvent(round(t, 3), kind, detail))

    sensors_effective = not (
        eff.sensor_degradation_onset_s is not None
        and fall_t is not None
        and eff.sensor_degradation_onset_s <= fall_t
        and eff.degradation_severity >= 1.0
    )

    robot_pos = (robot.start_pos[0], robot.start_pos[1])
    patrol_i = 0
    step = robot.speed_mps * tick_s

    fall_happened = False
    climbs_done: set[float] = set()
    touches_done: set[float] = set()
    calls_heard: set[int] = set()
    call_min_dist: dict[int, float] = {}
    detections: dict[str, float] = {}  # pathway -> detect time
    emergency_via: str | None = None
    alarm_raised = False
    alarm_route = "none"
    alarm_fail_logged = False
    bracelet_done = False
    smart_sensor_done = False
    onboard_done = False
    hub_was_up = hub_link_up(0.0)
    hub_loss_announced = hub_was_up is False
    last_help_request_t: float | None = None

    def detect(t: float, via: str) -> None:
        nonlocal emergency_via
        if via in detections:
            return
        detections[via] = t
        note(t, "fall-detected", via)
        em.emit(
            tick,
            DecisionEvent(
                decision_id="fall-detected",
                description=f"emergency detected via {via}",
                inputs_digest=make_payload_digest("fall-detected", via, f"{t:.1f}"),
            ),
        )
        if emergency_via is None:
            emergency_via = via

    def raise_alarm(t: float, route: str, how: str) -> None:
        nonlocal alarm_raised, alarm_route
        alarm_raised = True
        alarm_route = route
        note(t, "alarm-raised", how)
        em.emit(
            tick,
            DecisionEvent(
                decision_id="alarm-raised",
                description=how,
                inputs_digest=make_payload_digest("alarm-raised", route, f"{t:.1f}"),
            ),
        )

    for tick in range(n_ticks):
        t = tick * tick_s
        link_up = hub_link_up(t)

        # Hub transitions, as the robot experiences them.
        if hub_was_up and not link_up:
            note(t, "hub-connection-lost")
            em.emit(
                tick,
                DecisionEvent(
                    decision_id="hub-connection-lost",
                    description="lost session with home connection hub",
                    inputs_digest=make_payload_digest("hub-lost", f"{t:.1f}"),
                ),
            )
            hub_loss_announced = True
            last_help_request_t = None
        elif not hub_was_up and link_up and hub_loss_announced:
            note(t, "hub-connection-restored")
            em.emit(
                tick,
                DecisionEvent(
                    decision_id="hub-connection-restored",
                    description="session with home connection hub restored",
                    inputs_digest=make_payload_digest("hub-restored", f"{t:.1f}"),
                ),
            )
        hub_was_up = link_up

        # Resident moves until the fall pins them down.
        if fall_t is not None and t >= fall_t:
            resident_pos = _interp_position(resident.waypoints, fall_t)
        else:
            resident_pos = _interp_position(resident.waypoints, t)

        # Robot: follow when it can localize the resident, else patrol.
        follow = robot.force_follow or data_link(t)
        old_pos = robot_pos
        if follow:
            if _dist(robot_pos, resident_pos) > robot.follow_distance_m:
                robot_pos = _move_toward(robot_pos, resident_pos, step)
        else:
            if robot.patrol_waypoints:
                target = tuple(robot.patrol_waypoints[patrol_i])
                robot_pos = _move_toward(robot_pos, target, step)
                if robot_pos == target:
                    patrol_i = (patrol_i + 1) % len(robot.patrol_waypoints)
                    em.emit(
                        tick,
                        ActuatorCommand(
                            joint_id="base.wheels",
                            demand=robot.speed_mps,
                            sampled_position=math.atan2(
                                target[1] - old_pos[1], target[0] - old_pos[0]
                            ),
                        ),
                    )

        # Scripted resident actions.
        for climb_t in resident.climb_times:
            if climb_t not in climbs_done and t >= climb_t:
                climbs_done.add(climb_t)
                note(t, "resident-climbs", "climbs on a chair")
        if fall_t is not None and not fall_happened and t >= fall_t:
            fall_happened = True
            note(t, "resident-falls", "slips and falls")
        for touch in resident.touches:
            if touch.t not in touches_done and t >= touch.t:
                touches_done.add(touch.t)
                em.emit(
                    tick,
                    TouchEvent(screen_x=touch.x, screen_y=touch.y, widget=touch.widget),
                )

        # Calls for help: heard iff within the loudness-scaled range.
        for i, call in enumerate(resident.calls):
            if call.t <= t < call.t + call.duration_s:
                d = _dist(robot_pos, resident_pos)
                call_min_dist[i] = min(call_min_dist.get(i, math.inf), d)
                hear_range = robot.audible_range_m * LOUDNESS_RANGE_FACTOR[call.loudness]
                if (
                    i not in calls_heard
                    and eff.speech_recognizer_ok
                    and d <= hear_range
                ):
                    calls_heard.add(i)
                    note(t, "call-heard", f"call {i} at {d:.2f} m")
                    em.emit(tick, SpeechText(direction="heard", text="Help! Help me!"))
                    if fall_happened:
                        detect(t, "heard_call")

        # Pathway (b): on-robot fall detection.
        if (
            fall_happened
            and sensors_effective
            and not onboard_done
            and t >= fall_t + ONBOARD_DETECT_DELAY_S
        ):
            onboard_done = True
            detect(t, "onboard_sensors")

        # Pathway (d): smart-home sensor data, live over the hub link.
        if fall_happened and not smart_sensor_done and eff.smart_sensors_fall_detection:
            smart_sensor_done = True
            if data_link(t):
                detect(t, "smart_sensor_data")
            else:
                note(t, "smart-sensor-data-lost", "fall event not delivered: no link")

        # Pathway (c): the fall bracelet.
        if (
            fall_happened
            and eff.bracelet_worn
            and not bracelet_done
            and t >= fall_t + eff.bracelet_trigger_delay_s
        ):
            bracelet_done = True
            note(t, "bracelet-triggered")
            if robot.hub_direct_emergency_call and not alarm_raised:
                raise_alarm(t, "hub_landline", "hub placed emergency call by landline")
            elif hub_link_up(t):
                detect(t, "bracelet")
            else:
                note(t, "bracelet-signal-lost", "hub link down; robot not reached")

        # Robot reaction to a detected emergency: needs an outbound channel.
        if emergency_via is not None and not alarm_raised:
            if hub_link_up(t):
                route = "bracelet" if emergency_via == "bracelet" else "robot_wifi"
                raise_alarm(t, route, f"alarm sent over hub WiFi ({emergency_via})")
            elif robot.backup_comms:
                raise_alarm(
                    t, "robot_backup", f"alarm sent over backup comms ({emergency_via})"
                )
            elif not alarm_fail_logged:
                alarm_fail_logged = True
                note(t, "alarm-attempt-failed", "no outbound channel")
                em.emit(
                    tick,
                    DecisionEvent(
                        decision_id="alarm-attempt-failed",
                        description="no outbound channel for alarm",
                        inputs_digest=make_payload_digest("alarm-failed", f"{t:.1f}"),
                    ),
                )

        # The robot's own plea when it cannot reach the hub.
        if not link_up:
            due = (
                last_help_request_t is None
                or t - last_help_request_t >= robot.help_request_period_s
            )
            if due:
                last_help_request_t = t
                if robot.maintenance_alert_mode:
                    channel = "backup comms" if robot.backup_comms else "no channel"
                    em.emit(
                        tick,
                        DecisionEvent(
                            decision_id="maintenance-alert",
                            description=f"hub unreachable; engineer alerted via {channel}",
                            inputs_digest=make_payload_digest("maint", f"{t:.1f}"),
                        ),
                    )
                    note(t, "maintenance-alert", channel)
                else:
                    em.emit(
                        tick,
                        SpeechText(
                            direction="spoken",
                            text=(
                                "Please help: I cannot connect to the home "
                                "connection hub."
                            ),
                        ),
                    )
                    note(t, "help-request-spoken")

        # Periodic telemetry (periods resolved in integer ticks).
        if tick % conn_ticks == 0:
            em.emit(
                tick,
                ConnectivityStatus(
                    wifi_up=link_up, internet_up=link_up, hub_session_up=link_up
                ),
            )
        if tick % pos_ticks == 0:
            x, y = robot_pos
            if eff.sensor_noise_scale > 0:
                x += rng.gauss(0.0, eff.sensor_noise_scale)
                y += rng.gauss(0.0, eff.sensor_noise_scale)
            em.emit(
                tick,
                PositionEstimate(
                    x=round(x, 4),
                    y=round(y, 4),
                    source="tracking" if link_up else "odometry",
                ),
            )
        if tick % battery_ticks == 0:
            level = max(0.0, min(1.0, eff.battery_start - eff.battery_drain_per_s * t))
            em.emit(tick, BatteryStatus(level=round(level, 6)))
        if tick % sample_ticks == 0:
            blob = _synthetic_blob("cam", seed, tick)
            digest = hashlib.sha256(blob).digest()
            if log is not None:
                log.store_blob(blob)
            em.emit(
                tick,
                SenseSample(
                    sensor_id="camera.front",
                    blob_digest=digest,
                    blob_len=len(blob),
                    inline_summary=f"frame@{t:.0f}s",
                ),
            )
            audio = _synthetic_blob("mic", seed, tick)
            adigest = hashlib.sha256(audio).digest()
            if log is not None:
                log.store_blob(audio)
            em.emit(
                tick,
                AudioSample(
                    mic_id="mic.array", blob_digest=adigest, blob_len=len(audio)
                ),
            )

    if log is not None:
        log.sync()

    post_fall_calls = [
        (i, c)
        for i, c in enumerate(resident.calls)
        if fall_t is not None and c.t >= fall_t
    ]
    observables = {
        "resident_climbed": bool(climbs_done),
        "fall_occurred": fall_happened,
        "alarm_raised": alarm_raised,
        "alarm_not_raised_after_fall": fall_happened and not alarm_raised,
        "hub_connection_lost": any(
            s < eff.duration_s and e > 0 for s, e in eff.hub_outages
        ),
        "robot_out_of_earshot": bool(post_fall_calls)
        and all(
            call_min_dist.get(i, math.inf)
            > robot.audible_range_m * LOUDNESS_RANGE_FACTOR[c.loudness]
            for i, c in post_fall_calls
        ),
        "calls_weak": bool(post_fall_calls)
        and all(c.loudness == "weak" for _, c in post_fall_calls),
        "calls_unheard": not any(i in calls_heard for i, _ in post_fall_calls),
        "sensors_degraded_at_fall": not sensors_effective,
        "onboard_detection_failed": fall_happened and "onboard_sensors" not in detections,
        "bracelet_not_worn": not eff.bracelet_worn,
        "bracelet_alarm_undelivered": fall_happened
        and "bracelet" not in detections
        and alarm_route != "hub_landline",
        "no_smart_sensor_data": fall_happened and "smart_sensor_data" not in detections,
        "no_backup_comms": not robot.backup_comms,
        "no_outbound_channel": not robot.backup_comms
        and (not hub_link_up(fall_t) if fall_t is not None else bool(eff.hub_outages)),
    }

    outcome = MishapOutcome(
        fall_occurred=fall_happened,
        alarm_raised=alarm_raised,
        alarm_route=alarm_route,
        trace=trace,
        observables=observables,
        telemetry_digest=em.digest(),
        record_count=len(em.records),
        run_id=run_id,
    )
    return SimResult(outcome=outcome, records=em.records)


def _synthetic_blob(kind: str, seed: int, tick: int) -> bytes:
    base = hashlib.sha256(f"{kind}:{seed}:{tick}".encode()).digest()
    return base * 4  # 128 bytes of stand-in sensor data


def counterfactual_run(
    script: ScenarioScript,
    negation: str,
    remedies: tuple[Remedy, ...] | list[Remedy] = (),
    seed: int = 0,
    log: RingLog | None = None,
) -> SimResult:
    """Run the nearest world in which one named script factor does not hold."""
    from .factors import negate_factor

    edited = negate_factor(script, negation)
    return run(edited, seed=seed, remedies=remedies, log=log)
