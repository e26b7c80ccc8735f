"""ebbsim: run deterministic accident scenarios."""

from __future__ import annotations

import json
from pathlib import Path

import click

from ..recorder import RetentionPolicy, RingLog
from ..sim.engine import counterfactual_run, evaluate_mishaps, run
from ..sim.factors import FACTORS, UnknownFactorError
from ..sim.rose import ROSE_UNEVENT_SPECS, rose_baseline_script
from ..sim.script import ScenarioScript, parse_remedy


@click.group()
def main() -> None:
    """Deterministic discrete-event scenario simulator."""


@main.command(name="run")
@click.option("--script", "script_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option(
    "--remedy",
    "remedy_names",
    multiple=True,
    help="remedy name, repeatable (e.g. BackupComms, ImprovedMicRange:4.5)",
)
@click.option("--negate", default=None, help="counterfactual: negate one script factor")
@click.option("--out-log", default=None, type=click.Path(), help="write telemetry here")
@click.option("--outcome-json", default=None, type=click.Path())
@click.option(
    "--max-bytes", default=256 << 20, show_default=True, type=int, help="out-log ring size"
)
@click.option("--max-duration-h", default=24.0, show_default=True, type=float)
def run_cmd(
    script_path, seed, remedy_names, negate, out_log, outcome_json, max_bytes, max_duration_h
) -> None:
    """Run a scenario script, optionally recording its telemetry."""
    script = ScenarioScript.load(script_path)
    remedies = tuple(parse_remedy(name) for name in remedy_names)
    log = None
    if out_log:
        log = RingLog.create(
            out_log,
            RetentionPolicy(
                max_bytes=max_bytes,
                max_duration_ns=int(max_duration_h * 3600 * 1e9),
            ),
            robot_id="sim-robot",
            model="Pepper",
        )
    try:
        if negate:
            try:
                result = counterfactual_run(script, negate, remedies, seed=seed, log=log)
            except UnknownFactorError as exc:
                raise click.ClickException(str(exc)) from None
        else:
            result = run(script, seed=seed, remedies=remedies, log=log)
    finally:
        if log is not None:
            log.close()
    doc = result.outcome.to_json()
    if outcome_json:
        Path(outcome_json).write_text(json.dumps(doc, indent=2))
    click.echo(json.dumps({k: v for k, v in doc.items() if k != "trace"}, indent=2))
    mishaps = evaluate_mishaps(result.outcome)
    click.echo(f"mishaps: {sorted(mishaps) or 'none'}", err=True)


@main.command()
@click.option("--out", required=True, type=click.Path())
def example(out) -> None:
    """Write the assisted-living baseline scenario script."""
    rose_baseline_script().save(out)
    click.echo(f"wrote {out}")


@main.command(name="unevent-specs")
@click.option("--out", required=True, type=click.Path())
def unevent_specs(out) -> None:
    """Write the baseline expectation specs for use with ebbx unevents."""
    Path(out).write_text(
        json.dumps([s.to_json() for s in ROSE_UNEVENT_SPECS], indent=2)
    )
    click.echo(f"wrote {out}")


@main.command()
def factors() -> None:
    """List the named scenario factors and their capabilities."""
    for name in sorted(FACTORS):
        f = FACTORS[name]
        caps = []
        if f.can_negate:
            caps.append("negate")
        if f.can_assert:
            caps.append("assert")
        caps.append("observe")
        click.echo(f"{name:28s} [{', '.join(caps)}] {f.description}")
