"""The Rose baseline scenario: the investigated fall, as a script.

Flat geometry (metres): kitchen around (1, 1), living room around
(5, 4), charging dock at (6, 1). Rose spends the morning in the living
room, walks to the kitchen, climbs a chair at t=710 s, and falls at
t=720 s. The hub's wireless session to the robot drops at t=600 s and
never recovers within the scenario. The cleaner's visit earlier that
morning leaves the robot's sensors degraded from t=300 s. Rose is not
wearing her fall bracelet. Post-fall calls are weak; the patrol loop
keeps the robot between 3.0 and 5.1 m away, so a 2 m hearing range
misses every call while a 6 m one catches them all.
"""

from __future__ import annotations

from datetime import datetime, timezone

from ..extraction import ExpectationSpec
from .script import CallForHelp, ResidentPlan, RobotPlan, ScenarioScript, TouchAction

ROSE_EPOCH_WALL_MS = int(
    datetime(2025, 1, 6, 9, 0, 0, tzinfo=timezone.utc).timestamp() * 1000
)

ROSE_FALL_T = 720.0
ROSE_HUB_OUTAGE_START = 600.0
ROSE_DURATION_S = 1800.0

KITCHEN = (1.0, 1.0)
LIVING_ROOM = (5.0, 4.0)
DOCK = (6.0, 1.0)

# All loop points sit 3.04..5.10 m from the kitchen.
PATROL_LOOP = [[5.0, 4.0], [6.0, 2.0], [4.0, 1.5], [5.0, 3.0]]


def rose_baseline_script() -> ScenarioScript:
    resident = ResidentPlan(
        waypoints=[
            [0.0, *LIVING_ROOM],
            [640.0, *LIVING_ROOM],
            [652.0, *KITCHEN],
            [ROSE_DURATION_S, *KITCHEN],
        ],
        climb_times=[710.0],
        fall_t=ROSE_FALL_T,
        calls=[
            CallForHelp(t=730.0, loudness="weak"),
            CallForHelp(t=790.0, loudness="weak"),
            CallForHelp(t=850.0, loudness="weak"),
            CallForHelp(t=910.0, loudness="weak"),
            CallForHelp(t=1000.0, loudness="weak"),
            CallForHelp(t=1100.0, loudness="weak"),
        ],
        touches=[TouchAction(t=60.0, widget="menu.drinks", x=120, y=340)],
    )
    robot = RobotPlan(
        patrol_waypoints=[list(p) for p in PATROL_LOOP],
        start_pos=list(DOCK),
        speed_mps=0.5,
        audible_range_m=2.0,
        follow_distance_m=1.5,
    )
    script = ScenarioScript(
        duration_s=ROSE_DURATION_S,
        epoch_wall_ms=ROSE_EPOCH_WALL_MS,
        resident=resident,
        robot=robot,
        bracelet_worn=False,
        hub_outages=[[ROSE_HUB_OUTAGE_START, ROSE_DURATION_S]],
        sensor_degradation_onset_s=300.0,
        cleaner_visit=[120.0, 300.0],
    )
    script.validate()
    return script


ROSE_UNEVENT_SPECS = [
    ExpectationSpec(
        name="fall-detected event exists",
        trigger={"channel": "DecisionEvent", "equals": {"decision_id": "fall-detected"}},
        required=True,
    ),
    ExpectationSpec(
        name="alarm raised",
        trigger={"channel": "DecisionEvent", "equals": {"decision_id": "alarm-raised"}},
        required=True,
    ),
    ExpectationSpec(
        name="robot spoke help requests",
        trigger={
            "channel": "SpeechText",
            "equals": {"direction": "spoken"},
            "contains": {"text": "help"},
        },
        required=False,
    ),
]
