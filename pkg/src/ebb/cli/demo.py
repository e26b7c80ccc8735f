"""ebb-demo: build a complete ready-to-browse investigation case.

Runs the baseline scenario into a fresh ring log, writes the scenario
script, and seeds a case store with the investigation fixture (facts,
graph, attestations, validated recommendations) so the API and the
workbench have something real to show.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from ..api.store import Case, CaseStore
from ..recorder import RetentionPolicy, RingLog
from ..sim.engine import evaluate_mishaps, run
from ..sim.rose import ROSE_UNEVENT_SPECS
from ..wba.rose_fixture import rose_case


@click.command()
@click.argument("target", type=click.Path())
@click.option("--case-id", default="rose-fall", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
def main(target, case_id, seed) -> None:
    """Create TARGET/{case-store,logs,scripts} with the demo case inside."""
    target = Path(target)
    log_dir = target / "logs" / case_id
    script_path = target / "scripts" / f"{case_id}.json"
    store_dir = target / "case-store"
    script_path.parent.mkdir(parents=True, exist_ok=True)

    case_fixture = rose_case(validate_remedies=True, seed=seed)
    case_fixture.script.save(script_path)

    log = RingLog.create(
        log_dir,
        RetentionPolicy(max_bytes=256 << 20, max_duration_ns=24 * 3600 * 10**9),
        robot_id="pepper-01",
        model="Pepper",
    )
    try:
        result = run(case_fixture.script, seed=seed, log=log)
    finally:
        log.close()

    store = CaseStore(store_dir)
    case = Case(
        case_id=case_id,
        log_dir=str(log_dir),
        script_path=str(script_path),
        facts=case_fixture.facts,
        wbg=case_fixture.wbg,
        verdicts=case_fixture.attestations,
        recommendations=case_fixture.recommendations,
        unevent_specs=list(ROSE_UNEVENT_SPECS),
    )
    store.create(case)

    click.echo(
        json.dumps(
            {
                "case_id": case_id,
                "case_store": str(store_dir),
                "log_dir": str(log_dir),
                "script": str(script_path),
                "records": result.outcome.record_count,
                "mishaps": sorted(evaluate_mishaps(result.outcome)),
            },
            indent=2,
        )
    )
    click.echo(f"serve it: ebb-api --case-store {store_dir}", err=True)
