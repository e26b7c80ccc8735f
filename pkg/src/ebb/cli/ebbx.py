"""ebbx: extract, query and verify recorded telemetry."""

from __future__ import annotations

import json
import sys

import click

from .. import extraction
from ..records import ChannelTag
from ..recorder import read_log


def _window(from_, to):
    from_ms = extraction.iso_to_wall_ms(from_) if from_ else None
    to_ms = extraction.iso_to_wall_ms(to) if to else None
    return from_ms, to_ms


def _channel_tag(name: str | None) -> ChannelTag | None:
    if not name:
        return None
    return ChannelTag.from_name(name)


@click.group()
def main() -> None:
    """Investigator tooling over an EBB log directory."""


log_dir_option = click.option(
    "--log-dir", required=True, type=click.Path(exists=True, file_okay=False)
)
from_option = click.option("--from", "from_", default=None, help="ISO-8601 window start")
to_option = click.option("--to", default=None, help="ISO-8601 window end")


@main.command()
@log_dir_option
@from_option
@to_option
@click.option("--channel", default=None, help="restrict to one channel")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def export(log_dir, from_, to, channel, fmt) -> None:
    """Export records as CSV (default) or JSON rows."""
    records = read_log(log_dir).records
    from_ms, to_ms = _window(from_, to)
    tag = _channel_tag(channel)
    if fmt == "csv":
        click.echo(extraction.export_csv(records, from_ms, to_ms, tag), nl=False)
    else:
        rows = [
            extraction.record_row(r)
            for r in extraction.select_records(records, from_ms, to_ms, tag)
        ]
        click.echo(json.dumps(rows, indent=2))


@main.command()
@log_dir_option
@from_option
@to_option
@click.option("--channel", default=extraction.SESSION_MARKERS, show_default=True)
@click.option("--min-gap-ms", default=2000, show_default=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json")
def gaps(log_dir, from_, to, channel, min_gap_ms, fmt) -> None:
    """Detect coverage gaps on a channel."""
    records = read_log(log_dir).records
    from_ms, to_ms = _window(from_, to)
    records = extraction.select_records(records, from_ms, to_ms)
    found = extraction.detect_gaps(records, channel, min_gap_ms * 1_000_000)
    if fmt == "json":
        click.echo(json.dumps([g.to_json() for g in found], indent=2))
    else:
        click.echo("channel,start_t_mono_ns,end_t_mono_ns,duration_ns")
        for g in found:
            click.echo(
                f"{g.channel},{g.start_t_mono_ns},{g.end_t_mono_ns},{g.duration_ns}"
            )


@main.command()
@log_dir_option
@from_option
@to_option
@click.option(
    "--spec",
    "spec_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="JSON file of expectation specs",
)
@click.option("--format", "fmt", type=click.Choice(["json"]), default="json")
def unevents(log_dir, from_, to, spec_path, fmt) -> None:
    """Scan for expected events that are missing from the log."""
    records = read_log(log_dir).records
    from_ms, to_ms = _window(from_, to)
    records = extraction.select_records(records, from_ms, to_ms)
    specs = extraction.load_specs(spec_path)
    findings = extraction.scan_unevents(records, specs)
    click.echo(json.dumps([f.to_json() for f in findings], indent=2))
    if any(f.required and not f.satisfied for f in findings):
        sys.exit(3)


@main.command()
@log_dir_option
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def verify(log_dir, fmt) -> None:
    """Verify CRC and hash-chain integrity; exit 0 iff OK."""
    report = extraction.integrity_report(log_dir)
    if fmt == "json":
        click.echo(json.dumps(report.to_json(), indent=2))
    else:
        click.echo(report.to_text())
    if not report.ok:
        sys.exit(1)
