"""Command-line surfaces: ebbx, ebbsim, wba, ebb-demo."""

import csv
import io
import json

import pytest
from click.testing import CliRunner

from ebb.cli.demo import main as demo_main
from ebb.cli.ebbsim import main as ebbsim_main
from ebb.cli.ebbx import main as ebbx_main
from ebb.cli.wba import main as wba_main
from ebb.wba.rose_fixture import rose_case


@pytest.fixture()
def runner():
    return CliRunner()


def stdout_json(result):
    return json.loads(result.stdout)


def test_ebbx_export_csv(runner, rose_log_dir):
    result = runner.invoke(ebbx_main, ["export", "--log-dir", str(rose_log_dir)])
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(result.output)))
    assert len(rows) > 4000
    assert rows[0]["seq"] == "0"


def test_ebbx_export_window_and_channel(runner, rose_log_dir):
    result = runner.invoke(
        ebbx_main,
        [
            "export",
            "--log-dir",
            str(rose_log_dir),
            "--from",
            "2025-01-06T09:10:00Z",
            "--to",
            "2025-01-06T09:12:00Z",
            "--channel",
            "ConnectivityStatus",
            "--format",
            "json",
        ],
    )
    assert result.exit_code == 0, result.output
    rows = json.loads(result.output)
    assert rows and all(r["channel"] == "ConnectivityStatus" for r in rows)


def test_ebbx_gaps(runner, rose_log_dir):
    result = runner.invoke(
        ebbx_main,
        ["gaps", "--log-dir", str(rose_log_dir), "--channel", "ConnectivityStatus"],
    )
    assert result.exit_code == 0, result.output
    gaps = json.loads(result.output)
    assert len(gaps) == 1
    assert gaps[0]["start_t_mono_ns"] <= 720 * 10**9 <= gaps[0]["end_t_mono_ns"]


def test_ebbx_unevents_and_verify(runner, rose_log_dir, tmp_path):
    spec_file = tmp_path / "specs.json"
    result = runner.invoke(ebbsim_main, ["unevent-specs", "--out", str(spec_file)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        ebbx_main,
        ["unevents", "--log-dir", str(rose_log_dir), "--spec", str(spec_file)],
    )
    # The fall-detected expectation is required and unsatisfied: exit 3.
    assert result.exit_code == 3, result.output
    findings = {f["spec"]: f for f in json.loads(result.output)}
    assert findings["fall-detected event exists"]["satisfied"] is False

    result = runner.invoke(ebbx_main, ["verify", "--log-dir", str(rose_log_dir)])
    assert result.exit_code == 0
    assert "OK" in result.output


def test_ebbsim_run_baseline_and_remedy(runner, tmp_path):
    script_path = tmp_path / "script.json"
    assert runner.invoke(ebbsim_main, ["example", "--out", str(script_path)]).exit_code == 0

    outcome_path = tmp_path / "outcome.json"
    result = runner.invoke(
        ebbsim_main,
        [
            "run",
            "--script",
            str(script_path),
            "--seed",
            "0",
            "--outcome-json",
            str(outcome_path),
        ],
    )
    assert result.exit_code == 0, result.output
    outcome = json.loads(outcome_path.read_text())
    assert outcome["fall_occurred"] is True
    assert outcome["alarm_raised"] is False

    result = runner.invoke(
        ebbsim_main,
        ["run", "--script", str(script_path), "--remedy", "BackupComms"],
    )
    assert result.exit_code == 0, result.output
    assert stdout_json(result)["alarm_route"] == "robot_backup"


def test_ebbsim_run_writes_log(runner, tmp_path):
    script_path = tmp_path / "script.json"
    runner.invoke(ebbsim_main, ["example", "--out", str(script_path)])
    log_dir = tmp_path / "out-log"
    result = runner.invoke(
        ebbsim_main,
        ["run", "--script", str(script_path), "--out-log", str(log_dir)],
    )
    assert result.exit_code == 0, result.output
    verify = runner.invoke(ebbx_main, ["verify", "--log-dir", str(log_dir)])
    assert verify.exit_code == 0


def test_ebbsim_counterfactual_negate(runner, tmp_path):
    script_path = tmp_path / "script.json"
    runner.invoke(ebbsim_main, ["example", "--out", str(script_path)])
    result = runner.invoke(
        ebbsim_main,
        ["run", "--script", str(script_path), "--negate", "hub_outage"],
    )
    assert result.exit_code == 0, result.output
    assert stdout_json(result)["alarm_raised"] is True
    bad = runner.invoke(
        ebbsim_main, ["run", "--script", str(script_path), "--negate", "gremlins"]
    )
    assert bad.exit_code != 0


@pytest.fixture()
def fixture_files(tmp_path):
    case = rose_case(seed=0, validate_remedies=False)
    graph = tmp_path / "wbg.json"
    facts = tmp_path / "facts.json"
    verdicts = tmp_path / "verdicts.json"
    recs = tmp_path / "recs.json"
    script = tmp_path / "script.json"
    case.wbg.save(graph)
    facts.write_text(json.dumps([f.to_json() for f in case.facts]))
    verdicts.write_text(json.dumps([v.to_json() for v in case.attestations]))
    recs.write_text(json.dumps([r.to_json() for r in case.recommendations]))
    case.script.save(script)
    return {
        "graph": graph,
        "facts": facts,
        "verdicts": verdicts,
        "recs": recs,
        "script": script,
    }


def test_wba_validate(runner, fixture_files):
    result = runner.invoke(
        wba_main,
        [
            "validate",
            "--graph",
            str(fixture_files["graph"]),
            "--facts",
            str(fixture_files["facts"]),
        ],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["ok"] is True and doc["topnodes"] == 2


def test_wba_test_edge(runner, fixture_files):
    result = runner.invoke(
        wba_main,
        [
            "test-edge",
            "--graph",
            str(fixture_files["graph"]),
            "--script",
            str(fixture_files["script"]),
            "--edge",
            "hub-connection-failed,no-smart-sensor-data",
        ],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["result"] == "pass"


def test_wba_test_node(runner, fixture_files):
    result = runner.invoke(
        wba_main,
        [
            "test-node",
            "--graph",
            str(fixture_files["graph"]),
            "--script",
            str(fixture_files["script"]),
            "--node",
            "accident-2-no-alarm",
        ],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["result"] == "pass"


def test_wba_dot_and_report(runner, fixture_files):
    result = runner.invoke(wba_main, ["dot", "--graph", str(fixture_files["graph"])])
    assert result.exit_code == 0
    assert "digraph wbg" in result.output
    result = runner.invoke(
        wba_main,
        [
            "report",
            "--graph",
            str(fixture_files["graph"]),
            "--facts",
            str(fixture_files["facts"]),
            "--verdicts",
            str(fixture_files["verdicts"]),
            "--recommendations",
            str(fixture_files["recs"]),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "## 4. Remedies" in result.output


def test_demo_builds_complete_case(runner, tmp_path):
    target = tmp_path / "demo"
    result = runner.invoke(demo_main, [str(target)])
    assert result.exit_code == 0, result.output
    doc = stdout_json(result)
    assert doc["records"] > 4000
    assert (target / "case-store" / "rose-fall" / "case.json").exists()
    verify = runner.invoke(ebbx_main, ["verify", "--log-dir", doc["log_dir"]])
    assert verify.exit_code == 0
