"""Named scenario factors: the bridge between causal graphs and the sim.

A factor names one mechanism of the scripted world. It can offer up to
three capabilities:

  negate(script)  the nearest world in which the factor does not hold
                  (absent for factors whose negation is overdetermined
                  by other mechanisms and must be argued by hand),
  assert_(script) a world in which the factor is guaranteed to hold,
  observe(outcome) whether the factor held in a finished run.

Counterfactual edge tests need negate on the cause and observe on the
effect; sufficiency tests need assert_ on every cause and observe on
the node.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .engine import MishapOutcome
from .script import ScenarioScript


class UnknownFactorError(KeyError):
    pass


@dataclass(frozen=True)
class SimFactor:
    name: str
    description: str
    observe: Callable[[MishapOutcome], bool]
    negate: Callable[[ScenarioScript], ScenarioScript] | None = None
    assert_: Callable[[ScenarioScript], ScenarioScript] | None = None

    @property
    def can_negate(self) -> bool:
        return self.negate is not None

    @property
    def can_assert(self) -> bool:
        return self.assert_ is not None


def _obs(key: str) -> Callable[[MishapOutcome], bool]:
    def fn(outcome: MishapOutcome) -> bool:
        return bool(outcome.observables.get(key, False))

    return fn


def _drop_fall(script: ScenarioScript, drop_climbs: bool) -> ScenarioScript:
    out = script.copy()
    old_fall = out.resident.fall_t
    out.resident.fall_t = None
    if drop_climbs:
        out.resident.climb_times = []
    if old_fall is not None:
        # Cries for help were consequences of the fall.
        out.resident.calls = [c for c in out.resident.calls if c.t < old_fall]
    return out


def _ensure_fall(script: ScenarioScript) -> ScenarioScript:
    if script.resident.fall_t is not None:
        return script
    out = script.copy()
    out.resident.fall_t = out.duration_s * 0.4
    if not out.resident.climb_times:
        out.resident.climb_times = [max(0.0, out.resident.fall_t - 10.0)]
    return out


def _ensure_climb(script: ScenarioScript) -> ScenarioScript:
    out = _ensure_fall(script)
    if out is script and script.resident.climb_times:
        return script
    if not out.resident.climb_times:
        out = out.copy()
        out.resident.climb_times = [max(0.0, (out.resident.fall_t or 0.0) - 10.0)]
    return out


def _clear_outages(script: ScenarioScript) -> ScenarioScript:
    out = script.copy()
    out.hub_outages = []
    return out


def _ensure_outage_over_fall(script: ScenarioScript) -> ScenarioScript:
    fall_t = script.resident.fall_t
    probe = fall_t if fall_t is not None else script.duration_s / 2
    if any(s <= probe < e for s, e in script.hub_outages):
        return script
    out = script.copy()
    out.hub_outages.append([max(0.0, probe - 120.0), out.duration_s])
    out.hub_outages.sort()
    return out


def _force_follow(script: ScenarioScript) -> ScenarioScript:
    out = script.copy()
    out.robot.force_follow = True
    return out


def _unforce_follow(script: ScenarioScript) -> ScenarioScript:
    if not script.robot.force_follow:
        return script
    out = script.copy()
    out.robot.force_follow = False
    return out


def _calls_normal(script: ScenarioScript) -> ScenarioScript:
    out = script.copy()
    out.resident.calls = [replace(c, loudness="normal") for c in out.resident.calls]
    return out


def _calls_weak_post_fall(script: ScenarioScript) -> ScenarioScript:
    fall_t = script.resident.fall_t
    if fall_t is None:
        return script
    out = script.copy()
    out.resident.calls = [
        replace(c, loudness="weak") if c.t >= fall_t else c for c in out.resident.calls
    ]
    return out


def _clear_degradation(script: ScenarioScript) -> ScenarioScript:
    out = script.copy()
    out.sensor_degradation_onset_s = None
    return out


def _ensure_degradation(script: ScenarioScript) -> ScenarioScript:
    fall_t = script.resident.fall_t
    probe = fall_t if fall_t is not None else script.duration_s / 2
    if (
        script.sensor_degradation_onset_s is not None
        and script.sensor_degradation_onset_s <= probe
        and script.degradation_severity >= 1.0
    ):
        return script
    out = script.copy()
    out.sensor_degradation_onset_s = max(0.0, probe - 420.0)
    out.degradation_severity = 1.0
    return out


def _bracelet_off(script: ScenarioScript) -> ScenarioScript:
    if not script.bracelet_worn:
        return script
    out = script.copy()
    out.bracelet_worn = False
    return out


def _disable_direct_feed(script: ScenarioScript) -> ScenarioScript:
    out = _ensure_outage_over_fall(script)
    if out.direct_sensor_feed:
        out = out.copy()
        out.direct_sensor_feed = False
    return out


def _add_backup(script: ScenarioScript) -> ScenarioScript:
    out = script.copy()
    out.robot.backup_comms = True
    return out


def _remove_backup(script: ScenarioScript) -> ScenarioScript:
    if not script.robot.backup_comms:
        return script
    out = script.copy()
    out.robot.backup_comms = False
    return out


def _no_outbound_assert(script: ScenarioScript) -> ScenarioScript:
    return _remove_backup(_ensure_outage_over_fall(script))


FACTORS: dict[str, SimFactor] = {
    f.name: f
    for f in (
        SimFactor(
            name="resident_climbs_chair",
            description="the resident climbs on a chair to reach a high shelf",
            observe=_obs("resident_climbed"),
            negate=lambda s: _drop_fall(s, drop_climbs=True),
            assert_=_ensure_climb,
        ),
        SimFactor(
            name="resident_falls",
            description="the resident slips and falls",
            observe=_obs("fall_occurred"),
            negate=lambda s: _drop_fall(s, drop_climbs=False),
            assert_=_ensure_fall,
        ),
        SimFactor(
            name="hub_outage",
            description="the robot's wireless session with the home hub fails",
            observe=_obs("hub_connection_lost"),
            negate=_clear_outages,
            assert_=_ensure_outage_over_fall,
        ),
        SimFactor(
            name="robot_out_of_earshot",
            description="the robot stays beyond hearing range of every post-fall call",
            observe=_obs("robot_out_of_earshot"),
            negate=_force_follow,
            assert_=_unforce_follow,
        ),
        SimFactor(
            name="weak_calls",
            description="post-fall calls for help are too weak to carry far",
            observe=_obs("calls_weak"),
            negate=_calls_normal,
            assert_=_calls_weak_post_fall,
        ),
        SimFactor(
            name="calls_unheard",
            description="no post-fall call for help reaches the robot",
            observe=_obs("calls_unheard"),
            negate=None,  # overdetermined: distance and loudness both block it
            assert_=_unforce_follow,
        ),
        SimFactor(
            name="sensor_degradation",
            description="the robot's fall-detection sensors are damaged",
            observe=_obs("sensors_degraded_at_fall"),
            negate=_clear_degradation,
            assert_=_ensure_degradation,
        ),
        SimFactor(
            name="onboard_detection_failed",
            description="the robot's own sensors never register the fall",
            observe=_obs("onboard_detection_failed"),
            negate=None,
            assert_=_ensure_degradation,
        ),
        SimFactor(
            name="bracelet_not_worn",
            description="the resident is not wearing the fall bracelet",
            observe=_obs("bracelet_not_worn"),
            negate=None,  # wearing it alone changes nothing while the hub is down
            assert_=_bracelet_off,
        ),
        SimFactor(
            name="bracelet_alarm_undelivered",
            description="no bracelet-originated alarm reaches the robot or a line out",
            observe=_obs("bracelet_alarm_undelivered"),
            negate=None,
            assert_=_bracelet_off,
        ),
        SimFactor(
            name="no_smart_sensor_data",
            description="smart-home sensor data never reaches the robot",
            observe=_obs("no_smart_sensor_data"),
            negate=None,  # a data path alone cannot undo the lost alarm
            assert_=_disable_direct_feed,
        ),
        SimFactor(
            name="no_backup_comms",
            description="the robot has no backup communications fitted",
            observe=_obs("no_backup_comms"),
            negate=_add_backup,
            assert_=_remove_backup,
        ),
        SimFactor(
            name="no_outbound_channel",
            description="the robot has no channel left to send an alarm",
            observe=_obs("no_outbound_channel"),
            negate=None,  # granting a channel is exactly the backup-comms edit
            assert_=_no_outbound_assert,
        ),
        SimFactor(
            name="alarm_not_raised",
            description="no alarm is raised after the fall",
            observe=_obs("alarm_not_raised_after_fall"),
            negate=None,
            assert_=None,
        ),
    )
}


def get_factor(name: str) -> SimFactor:
    try:
        return FACTORS[name]
    except KeyError:
        raise UnknownFactorError(f"unknown scenario factor {name!r}") from None


def negate_factor(script: ScenarioScript, name: str) -> ScenarioScript:
    factor = get_factor(name)
    if factor.negate is None:
        raise UnknownFactorError(
            f"factor {name!r} has no scripted negation; record an attestation"
        )
    return factor.negate(script)


__all__ = [
    "FACTORS",
    "SimFactor",
    "UnknownFactorError",
    "get_factor",
    "negate_factor",
]
