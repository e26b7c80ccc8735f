from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ebb.recorder import RetentionPolicy, RingLog, SyncMode
from ebb.records import (
    ActuatorCommand,
    AudioSample,
    BatteryStatus,
    ConnectivityStatus,
    DecisionEvent,
    PositionEstimate,
    SenseSample,
    SpeechText,
    TouchEvent,
)
from ebb.sim.engine import run as sim_run
from ebb.sim.rose import rose_baseline_script

BIG_POLICY = RetentionPolicy(
    max_bytes=256 << 20, max_duration_ns=24 * 3600 * 10**9
)


def sample_payloads():
    digest = bytes(range(32))
    return [
        SenseSample("camera.front", digest, 128, "frame"),
        AudioSample("mic.array", digest, 64),
        SpeechText("heard", "Help! Help me!"),
        SpeechText("spoken", "Please help: I cannot connect."),
        TouchEvent(120, 340, "menu.drinks"),
        ActuatorCommand("base.wheels", 0.5, -1.25),
        DecisionEvent("fall-detected", "emergency detected via bracelet", digest),
        BatteryStatus(0.83),
        ConnectivityStatus(True, False, True),
        PositionEstimate(4.25, 1.5, "odometry"),
    ]


def build_log(directory, payloads=None, policy=None, t_step_ns=10**9):
    """Write a small closed log; returns the appended records."""
    log = RingLog.create(
        directory,
        policy or BIG_POLICY,
        robot_id="pepper-01",
        model="Pepper",
        sync_mode=SyncMode.always_sync(),
    )
    payloads = payloads or sample_payloads() * 3
    try:
        for i, payload in enumerate(payloads):
            log.append(payload, i * t_step_ns, 1_700_000_000_000 + i * 1000)
        return log.snapshot()
    finally:
        log.close()


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_report.LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rose_script():
    return rose_baseline_script()


@pytest.fixture(scope="session")
def rose_result(rose_script):
    """One baseline run shared by the read-only tests."""
    return sim_run(rose_script, seed=0)


@pytest.fixture(scope="session")
def rose_log_dir(tmp_path_factory, rose_script):
    """A real on-disk log of the baseline scenario."""
    directory = tmp_path_factory.mktemp("rose-log")
    log = RingLog.create(
        directory, BIG_POLICY, robot_id="pepper-01", model="Pepper"
    )
    try:
        sim_run(rose_script, seed=0, log=log)
    finally:
        log.close()
    return directory
