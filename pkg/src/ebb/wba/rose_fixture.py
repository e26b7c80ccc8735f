"""The shipped Rose investigation fixture.

Encodes the two-mishap causal graph for the baseline scenario: a left
subgraph for the fall itself and a right subgraph for the unalarmed
fall, whose four failure pathways (hearing, on-robot sensing, bracelet,
smart-home data) are bound to scenario factors. The no-outbound-channel
node dominates the right subgraph: restoring any single pathway still
raises no alarm while the robot's only link out is down.

Edges whose counterfactual is overdetermined (every pathway into the
alarm mishap, and the bracelet pair) carry analyst attestations instead
of simulated verdicts; the engine's rule is negate-one-factor, and no
single negation flips an overdetermined effect. Node and edge counts
here are fixture constants, not claims about any particular drawing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..records import ChannelTag, EbbRecord
from ..sim.engine import run as sim_run
from ..sim.rose import rose_baseline_script
from ..sim.script import ScenarioScript
from .model import Fact, FactorNode, Recommendation, TestVerdict, WhyBecauseGraph
from .report import validate_recommendations

ACCIDENT_FALL = "accident-1-fall"
ACCIDENT_NO_ALARM = "accident-2-no-alarm"

# The four pathway nodes and the dominating channel node, by pathway letter.
PATHWAY_NODES = {
    "a": "calls-unheard",
    "b": "onboard-detection-failed",
    "c": "bracelet-alarm-undelivered",
    "d": "no-smart-sensor-data",
    "e": "no-outbound-channel",
}


@dataclass
class RoseCase:
    script: ScenarioScript
    wbg: WhyBecauseGraph
    facts: list[Fact]
    attestations: list[TestVerdict]
    recommendations: list[Recommendation]
    record_refs: dict[str, tuple[int, ...]] = field(default_factory=dict)


def _evidence_refs(records: list[EbbRecord]) -> dict[str, tuple[int, ...]]:
    """Pick the log records each EBB-sourced fact cites."""
    spoken = [
        r.seq
        for r in records
        if r.channel == ChannelTag.SPEECH_TEXT and r.payload.direction == "spoken"
    ]
    hub_down = [
        r.seq
        for r in records
        if r.channel == ChannelTag.CONNECTIVITY_STATUS
        and not r.payload.hub_session_up
    ]
    odometry = [
        r.seq
        for r in records
        if r.channel == ChannelTag.POSITION_ESTIMATE and r.payload.source == "odometry"
    ]
    window = (records[0].seq, records[-1].seq) if records else (0, 0)
    return {
        "help_requests": tuple(spoken[:3]),
        "hub_gap": tuple(hub_down[:2] + hub_down[-1:]),
        "patrol": tuple(odometry[:3]),
        "window": window,
    }


def _facts(refs: dict[str, tuple[int, ...]]) -> list[Fact]:
    return [
        Fact(
            id="w-climb",
            statement="Rose climbed on a chair to reach an upper cupboard, "
            "slipped and fell onto the kitchen floor",
            source="witness",
            confidence="corroborated",
        ),
        Fact(
            id="w-weak-calls",
            statement="After the fall Rose was too weak to call out loudly; "
            "her calls carried roughly two metres",
            source="witness",
            confidence="corroborated",
        ),
        Fact(
            id="w-no-bracelet",
            statement="Rose had not put on her fall alert bracelet that day",
            source="witness",
            confidence="corroborated",
        ),
        Fact(
            id="w-aimless-robot",
            statement="The paramedic saw the robot moving between living area "
            "and kitchen without apparent purpose",
            source="witness",
            confidence="testimony-only",
        ),
        Fact(
            id="w-cleaning",
            statement="The cleaner wiped door handles and the whole robot with "
            "disinfectant during the weekly clean",
            source="witness",
            confidence="corroborated",
        ),
        Fact(
            id="e-hub-gap",
            statement="Recorder shows the hub session down from 600 s onward, "
            "spanning the fall",
            source="ebb",
            confidence="corroborated",
            record_refs=refs["hub_gap"],
        ),
        Fact(
            id="e-no-fall-log",
            statement="No fall-detected decision appears anywhere in the "
            "recorded window",
            source="ebb",
            confidence="corroborated",
            record_refs=refs["window"],
        ),
        Fact(
            id="e-help-requests",
            statement="Recorder holds repeated spoken requests for help about "
            "the lost hub connection",
            source="ebb",
            confidence="corroborated",
            record_refs=refs["help_requests"],
        ),
        Fact(
            id="e-odometry-patrol",
            statement="Position estimates fall back to odometry and wander the "
            "patrol loop during the outage",
            source="ebb",
            confidence="corroborated",
            record_refs=refs["patrol"],
        ),
        Fact(
            id="f-sensor-damage",
            statement="Camera and navigation sensors return erroneous data; "
            "residue on the housings is consistent with disinfectant",
            source="forensic",
            confidence="corroborated",
        ),
        Fact(
            id="d-bracelet-routing",
            statement="Home documentation: bracelet alarms reach the robot via "
            "the home connection hub",
            source="document",
            confidence="corroborated",
        ),
        Fact(
            id="d-wifi-only",
            statement="The robot's specification lists hub WiFi as its only "
            "communications channel",
            source="document",
            confidence="corroborated",
        ),
        Fact(
            id="d-cleaning-policy",
            statement="Complex policy requires disinfecting the robot during "
            "every weekly clean",
            source="document",
            confidence="corroborated",
        ),
        Fact(
            id="d-smart-home",
            statement="Smart-home sensor data is delivered to the robot via "
            "the home connection hub",
            source="document",
            confidence="corroborated",
        ),
    ]


def _graph() -> WhyBecauseGraph:
    wbg = WhyBecauseGraph()
    nodes = [
        # Left subgraph: the fall.
        FactorNode(
            id="reach-decision",
            kind="event",
            label="Rose decides to reach a high cupboard",
            fact_refs=("w-climb",),
        ),
        FactorNode(
            id="climbs-chair",
            kind="event",
            label="Rose climbs on a chair",
            fact_refs=("w-climb",),
            sim_binding="resident_climbs_chair",
        ),
        FactorNode(
            id="slips-falls",
            kind="event",
            label="Rose slips and falls",
            fact_refs=("w-climb",),
            sim_binding="resident_falls",
        ),
        FactorNode(
            id=ACCIDENT_FALL,
            kind="mishap",
            label="Accident 1: Rose injured on the floor",
            fact_refs=("w-climb",),
            sim_binding="resident_falls",
        ),
        # Right subgraph: the unalarmed fall.
        FactorNode(
            id="hub-connection-failed",
            kind="state",
            label="Robot-hub wireless session failed",
            fact_refs=("e-hub-gap", "e-help-requests"),
            sim_binding="hub_outage",
        ),
        FactorNode(
            id="robot-too-far",
            kind="state",
            label="Robot out of earshot (did not know where Rose was)",
            fact_refs=("w-aimless-robot", "e-odometry-patrol"),
            sim_binding="robot_out_of_earshot",
        ),
        FactorNode(
            id="weak-calls",
            kind="state",
            label="Rose's calls too weak to carry",
            fact_refs=("w-weak-calls",),
            sim_binding="weak_calls",
        ),
        FactorNode(
            id=PATHWAY_NODES["a"],
            kind="unevent",
            label="Robot never hears a call for help",
            fact_refs=("w-weak-calls", "e-no-fall-log"),
            sim_binding="calls_unheard",
        ),
        FactorNode(
            id="disinfectant-cleaning",
            kind="process",
            label="Robot wiped with disinfectant during weekly clean",
            fact_refs=("w-cleaning", "d-cleaning-policy"),
        ),
        FactorNode(
            id="sensors-degraded",
            kind="state",
            label="Fall-detection sensors damaged",
            fact_refs=("f-sensor-damage",),
            sim_binding="sensor_degradation",
        ),
        FactorNode(
            id=PATHWAY_NODES["b"],
            kind="unevent",
            label="On-robot fall detection never fires",
            fact_refs=("f-sensor-damage", "e-no-fall-log"),
            sim_binding="onboard_detection_failed",
        ),
        FactorNode(
            id="bracelet-not-worn",
            kind="state",
            label="Fall bracelet not worn",
            fact_refs=("w-no-bracelet",),
            sim_binding="bracelet_not_worn",
        ),
        FactorNode(
            id="bracelet-routes-via-hub",
            kind="state",
            label="Bracelet alarms route only via the home hub",
            fact_refs=("d-bracelet-routing",),
        ),
        FactorNode(
            id=PATHWAY_NODES["c"],
            kind="unevent",
            label="No bracelet alarm is delivered",
            fact_refs=("w-no-bracelet", "d-bracelet-routing"),
            sim_binding="bracelet_alarm_undelivered",
        ),
        FactorNode(
            id=PATHWAY_NODES["d"],
            kind="unevent",
            label="No smart-home sensor data reaches the robot",
            fact_refs=("d-smart-home", "e-hub-gap"),
            sim_binding="no_smart_sensor_data",
        ),
        FactorNode(
            id="no-backup-comms",
            kind="state",
            label="No backup communications fitted",
            fact_refs=("d-wifi-only",),
            sim_binding="no_backup_comms",
        ),
        FactorNode(
            id=PATHWAY_NODES["e"],
            kind="state",
            label="Robot has no outbound alarm channel",
            fact_refs=("d-wifi-only", "e-hub-gap"),
            sim_binding="no_outbound_channel",
        ),
        FactorNode(
            id=ACCIDENT_NO_ALARM,
            kind="mishap",
            label="Accident 2: robot fails to raise the alarm",
            fact_refs=("e-no-fall-log",),
            sim_binding="alarm_not_raised",
        ),
    ]
    for node in nodes:
        wbg.add_node(node)
    edges = [
        ("reach-decision", "climbs-chair"),
        ("climbs-chair", "slips-falls"),
        ("slips-falls", ACCIDENT_FALL),
        ("hub-connection-failed", "robot-too-far"),
        ("robot-too-far", PATHWAY_NODES["a"]),
        ("weak-calls", PATHWAY_NODES["a"]),
        ("disinfectant-cleaning", "sensors-degraded"),
        ("sensors-degraded", PATHWAY_NODES["b"]),
        ("bracelet-not-worn", PATHWAY_NODES["c"]),
        ("bracelet-routes-via-hub", PATHWAY_NODES["c"]),
        ("hub-connection-failed", PATHWAY_NODES["d"]),
        ("hub-connection-failed", PATHWAY_NODES["e"]),
        ("no-backup-comms", PATHWAY_NODES["e"]),
        (PATHWAY_NODES["a"], ACCIDENT_NO_ALARM),
        (PATHWAY_NODES["b"], ACCIDENT_NO_ALARM),
        (PATHWAY_NODES["c"], ACCIDENT_NO_ALARM),
        (PATHWAY_NODES["d"], ACCIDENT_NO_ALARM),
        (PATHWAY_NODES["e"], ACCIDENT_NO_ALARM),
    ]
    for cause, effect in edges:
        wbg.add_edge(cause, effect)
    return wbg


_PATH_E_NOTE = (
    "restoring this pathway alone would not have raised the alarm while the "
    "robot's only channel out was down; necessity holds only jointly, so the "
    "edge is attested and joint adequacy is covered by the sufficiency test "
    "on the mishap node"
)


def rose_attestations(wbg: WhyBecauseGraph) -> list[TestVerdict]:
    """Analyst verdicts for the edges the simulator cannot decide alone."""
    out = [
        TestVerdict.for_edge(
            "reach-decision",
            "climbs-chair",
            mode="attested",
            result="pass",
            justification="Rose stated she climbed specifically to reach the "
            "cupboard; without that intention she would not have climbed",
        ),
        TestVerdict.for_edge(
            "disinfectant-cleaning",
            "sensors-degraded",
            mode="attested",
            result="pass",
            justification="residue on the sensor housings matches the cleaning "
            "product; no other damage mechanism was found",
        ),
        TestVerdict.for_edge(
            "bracelet-not-worn",
            PATHWAY_NODES["c"],
            mode="attested",
            result="pass",
            justification="an unworn bracelet cannot trigger; overdetermined "
            "with the hub routing, so attested rather than simulated",
        ),
        TestVerdict.for_edge(
            "bracelet-routes-via-hub",
            PATHWAY_NODES["c"],
            mode="attested",
            result="pass",
            justification="even worn, the bracelet's alarm path ran through "
            "the failed hub link; overdetermined with not-worn",
        ),
    ]
    for letter in "abcde":
        out.append(
            TestVerdict.for_edge(
                PATHWAY_NODES[letter],
                ACCIDENT_NO_ALARM,
                mode="attested",
                result="pass",
                justification=_PATH_E_NOTE,
            )
        )
    for verdict in out:
        verdict.validate()
    return out


def _recommendations() -> list[Recommendation]:
    return [
        Recommendation(
            id="rec-backup-comms",
            priority=1,
            text="Fit the robot with a backup communications channel (for "
            "example a cellular data modem) so alarms and hub data survive a "
            "WiFi failure",
            remedy_binding="BackupComms",
        ),
        Recommendation(
            id="rec-maintenance-alert",
            priority=2,
            text="On detecting a WiFi or hub failure, alert a maintenance "
            "engineer over the backup channel instead of asking the resident "
            "for help",
            remedy_binding="WifiFailureMaintenanceAlert",
        ),
        Recommendation(
            id="rec-hub-landline",
            priority=3,
            text="Let the home hub place an emergency call directly over its "
            "landline when the fall bracelet triggers, bypassing the robot",
            remedy_binding="HubDirectEmergencyCall",
        ),
        Recommendation(
            id="rec-mic-range",
            priority=4,
            text="Fit more sensitive microphones so calls for help carry "
            "further",
            remedy_binding="ImprovedMicRange",
        ),
        Recommendation(
            id="rec-bracelet-reminder",
            priority=5,
            text="Add a daily robot reminder so the resident puts the fall "
            "bracelet on",
            remedy_binding="BraceletReminder",
        ),
        Recommendation(
            id="rec-no-disinfectant",
            priority=6,
            text="Stop wiping the robot with disinfectant; specify a "
            "sensor-safe cleaning product",
            remedy_binding="NoDisinfectant",
        ),
    ]


def rose_case(
    records: list[EbbRecord] | None = None,
    validate_remedies: bool = False,
    seed: int = 0,
) -> RoseCase:
    """Build the complete Rose fixture.

    records: the baseline run's telemetry, used to fill the EBB facts'
    record references; when omitted, a baseline run supplies them.
    """
    script = rose_baseline_script()
    if records is None:
        records = sim_run(script, seed=seed).records
    refs = _evidence_refs(records)
    facts = _facts(refs)
    wbg = _graph()
    recommendations = _recommendations()
    if validate_remedies:
        recommendations = validate_recommendations(recommendations, script, seed=seed)
    return RoseCase(
        script=script,
        wbg=wbg,
        facts=facts,
        attestations=rose_attestations(wbg),
        recommendations=recommendations,
        record_refs=refs,
    )
