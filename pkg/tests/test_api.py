"""HTTP endpoint contracts, CLI equivalence, crash-safe persistence."""

import json
import os

import pytest
from fastapi.testclient import TestClient

from ebb.api.app import build_app
from ebb.api.store import Case, CaseStore
from ebb.extraction import export_csv, detect_gaps
from ebb.recorder import read_log
from ebb.sim.rose import ROSE_UNEVENT_SPECS
from ebb.wba.rose_fixture import rose_case


@pytest.fixture(scope="module")
def seeded(tmp_path_factory, rose_log_dir):
    """A case store holding the complete demo case, plus its client."""
    store_dir = tmp_path_factory.mktemp("case-store")
    fixture = rose_case(seed=0, validate_remedies=False)
    script_path = store_dir / "rose.json"
    fixture.script.save(script_path)
    store = CaseStore(store_dir)
    store.create(
        Case(
            case_id="rose-fall",
            log_dir=str(rose_log_dir),
            script_path=str(script_path),
            facts=fixture.facts,
            wbg=fixture.wbg,
            verdicts=fixture.attestations,
            recommendations=fixture.recommendations,
            unevent_specs=list(ROSE_UNEVENT_SPECS),
        )
    )
    client = TestClient(build_app(store_dir), raise_server_exceptions=False)
    return client, store_dir, fixture


def test_empty_store_lists_no_cases(tmp_path):
    client = TestClient(build_app(tmp_path))
    assert client.get("/cases").json() == []


def test_create_and_fetch_case(tmp_path):
    client = TestClient(build_app(tmp_path))
    response = client.post("/cases", json={"case_id": "fresh"})
    assert response.status_code == 201
    assert client.get("/cases").json() == ["fresh"]
    doc = client.get("/cases/fresh").json()
    assert doc["case_id"] == "fresh"
    assert doc["wbg"]["nodes"] == []
    # Duplicate ids conflict.
    assert client.post("/cases", json={"case_id": "fresh"}).status_code == 409
    # Nonexistent referenced paths are refused.
    bad = client.post("/cases", json={"case_id": "x", "log_dir": "/no/such/dir"})
    assert bad.status_code == 409


def test_unknown_case_404(seeded):
    client, _, _ = seeded
    response = client.get("/cases/nope")
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "not-found"


def test_records_equal_cli_export(seeded, rose_log_dir):
    client, _, _ = seeded
    window = {"from": "2025-01-06T09:05:00Z", "to": "2025-01-06T09:20:00Z"}
    rows = client.get("/cases/rose-fall/records", params=window).json()
    records = read_log(rose_log_dir).records
    from ebb.extraction import iso_to_wall_ms, record_row, select_records

    expected = [
        record_row(r)
        for r in select_records(
            records,
            iso_to_wall_ms(window["from"]),
            iso_to_wall_ms(window["to"]),
        )
    ]
    assert rows == expected
    assert len(rows) > 0

    csv_text = client.get(
        "/cases/rose-fall/records", params={**window, "format": "csv"}
    ).text
    assert csv_text == export_csv(
        records, iso_to_wall_ms(window["from"]), iso_to_wall_ms(window["to"])
    )


def test_gaps_endpoint_equals_detect_gaps(seeded, rose_log_dir):
    client, _, _ = seeded
    got = client.get(
        "/cases/rose-fall/gaps",
        params={"min_gap_ms": 2000, "channel": "ConnectivityStatus"},
    ).json()
    records = read_log(rose_log_dir).records
    expected = [
        g.to_json() for g in detect_gaps(records, "ConnectivityStatus", 2000 * 10**6)
    ]
    assert got == expected
    assert len(got) >= 1


def test_unevents_endpoint(seeded):
    client, _, _ = seeded
    findings = {f["spec"]: f for f in client.get("/cases/rose-fall/unevents").json()}
    assert findings["fall-detected event exists"]["satisfied"] is False
    assert findings["robot spoke help requests"]["satisfied"] is True


def test_wbg_validate_endpoint(seeded):
    client, _, _ = seeded
    doc = client.post("/cases/rose-fall/wbg/validate").json()
    assert doc["ok"] is True
    assert doc["topnodes"] == 2


def test_put_wbg_cycle_rejected_409(seeded):
    client, _, fixture = seeded
    doc = fixture.wbg.to_json()
    doc["edges"] = doc["edges"] + [["calls-unheard", "hub-connection-failed"]]
    response = client.put("/cases/rose-fall/wbg", json=doc)
    assert response.status_code == 409
    detail = response.json()["detail"]
    assert any(v["code"] == "cycle" for v in detail["violations"])
    # And the server-side graph is unchanged.
    assert client.get("/cases/rose-fall/wbg").json() == fixture.wbg.to_json()


def test_put_wbg_staging_allows_unlinked_nodes(seeded):
    client, _, fixture = seeded
    doc = fixture.wbg.to_json()
    doc["nodes"] = doc["nodes"] + [
        {"id": "draft", "kind": "state", "label": "draft node", "fact_refs": [], "sim_binding": None}
    ]
    response = client.put("/cases/rose-fall/wbg", json=doc)
    assert response.status_code == 200
    # Restore.
    assert client.put("/cases/rose-fall/wbg", json=fixture.wbg.to_json()).status_code == 200


def test_test_edge_endpoint_persists_verdict(seeded):
    client, _, _ = seeded
    response = client.post(
        "/cases/rose-fall/wbg/test-edge",
        json={"cause": "hub-connection-failed", "effect": "no-smart-sensor-data"},
    )
    assert response.status_code == 200
    verdict = response.json()
    assert verdict["mode"] == "simulated"
    assert verdict["result"] == "pass"
    ledger = client.get("/cases/rose-fall/verdicts").json()
    assert any(
        v["target"] == ["edge", "hub-connection-failed", "no-smart-sensor-data"]
        and v["mode"] == "simulated"
        for v in ledger
    )


def test_test_edge_unknown_node_404(seeded):
    client, _, _ = seeded
    response = client.post(
        "/cases/rose-fall/wbg/test-edge", json={"cause": "ghost", "effect": "spook"}
    )
    assert response.status_code == 404


def test_test_node_endpoint(seeded):
    client, _, _ = seeded
    response = client.post(
        "/cases/rose-fall/wbg/test-node", json={"node": "accident-2-no-alarm"}
    )
    assert response.status_code == 200
    assert response.json()["result"] == "pass"


def test_dot_endpoint(seeded):
    client, _, _ = seeded
    response = client.get("/cases/rose-fall/wbg.dot")
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/vnd.graphviz")
    assert response.text.count("doubleoctagon") == 2


def test_sim_run_endpoint_backup_comms(seeded):
    client, _, _ = seeded
    response = client.post(
        "/cases/rose-fall/sim/run", json={"remedies": ["BackupComms"]}
    )
    outcome = response.json()
    assert outcome["alarm_raised"] is True
    assert outcome["alarm_route"] == "robot_backup"
    assert outcome["mishaps"] == ["Accident1"]
    baseline = client.post("/cases/rose-fall/sim/run", json={}).json()
    assert baseline["alarm_raised"] is False
    assert baseline["mishaps"] == ["Accident1", "Accident2"]


def test_sim_run_unknown_remedy_400(seeded):
    client, _, _ = seeded
    response = client.post(
        "/cases/rose-fall/sim/run", json={"remedies": ["MagicWand"]}
    )
    assert response.status_code == 400


def test_recommendations_round_trip(seeded):
    client, _, fixture = seeded
    docs = client.get("/cases/rose-fall/recommendations").json()
    assert [d["priority"] for d in docs] == [1, 2, 3, 4, 5, 6]
    response = client.put("/cases/rose-fall/recommendations", json=docs)
    assert response.status_code == 200
    dup = [dict(d, priority=1) for d in docs]
    assert client.put("/cases/rose-fall/recommendations", json=dup).status_code == 409


def test_report_endpoint(seeded):
    client, _, _ = seeded
    doc = client.get("/cases/rose-fall/report").json()
    assert doc["topnodes"] == ["accident-1-fall", "accident-2-no-alarm"]
    assert "## 4. Remedies" in doc["markdown"]


def test_facts_endpoints(seeded):
    client, _, fixture = seeded
    facts = client.get("/cases/rose-fall/facts").json()
    assert len(facts) == len(fixture.facts)
    bad = [{"id": "x", "statement": "s", "source": "ebb", "record_refs": []}]
    assert client.put("/cases/rose-fall/facts", json=bad).status_code == 400
    assert client.put("/cases/rose-fall/facts", json=facts).status_code == 200


def test_atomic_persistence_interrupted_write(tmp_path):
    """A failed write must leave the previous document intact."""
    store = CaseStore(tmp_path)
    store.create(Case(case_id="c1"))
    case = store.load("c1")
    case.ui_annotations = {"x": 1}
    original = (tmp_path / "c1" / "case.json").read_text()

    real_replace = os.replace
    calls = {"n": 0}

    def failing_replace(src, dst):
        calls["n"] += 1
        raise OSError("simulated crash before rename")

    os.replace = failing_replace
    try:
        with pytest.raises(OSError):
            store.save(case)
    finally:
        os.replace = real_replace
    assert calls["n"] == 1
    assert (tmp_path / "c1" / "case.json").read_text() == original
    assert store.load("c1").ui_annotations == {}
    store.save(case)
    assert store.load("c1").ui_annotations == {"x": 1}


def test_corrupt_case_store_refused_with_diagnostic(tmp_path):
    store = CaseStore(tmp_path)
    store.create(Case(case_id="c1"))
    (tmp_path / "c1" / "case.json").write_text("{broken")
    client = TestClient(build_app(tmp_path), raise_server_exceptions=False)
    response = client.get("/cases/c1")
    assert response.status_code == 500
    assert response.json()["detail"]["code"] == "corrupt-case-store"


def test_case_without_log_400(tmp_path):
    client = TestClient(build_app(tmp_path))
    client.post("/cases", json={"case_id": "bare"})
    assert client.get("/cases/bare/records").status_code == 400
    assert client.get("/cases/bare/unevents").status_code == 400
