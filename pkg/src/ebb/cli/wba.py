"""wba: validate, test and render why-because graphs."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..sim.script import ScenarioScript
from ..wba.causal import counterfactual_test, sufficiency_test
from ..wba.dot import export_dot
from ..wba.model import (
    Fact,
    GraphError,
    Recommendation,
    TestVerdict,
    WhyBecauseGraph,
)
from ..wba.report import investigation_report
from ..wba.validate import validate_graph


@click.group()
def main() -> None:
    """Why-because analysis over graph JSON documents."""


graph_option = click.option(
    "--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False)
)
script_option = click.option(
    "--script", "script_path", default=None, type=click.Path(exists=True, dir_okay=False)
)


def _load_graph(path: str) -> WhyBecauseGraph:
    try:
        return WhyBecauseGraph.load(path)
    except (GraphError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"bad graph file: {exc}") from None


def _load_facts(path: str | None) -> list[Fact]:
    if not path:
        return []
    return [Fact.from_json(doc) for doc in json.loads(Path(path).read_text())]


def _need_script(script_path: str | None) -> ScenarioScript:
    if not script_path:
        raise click.ClickException("--script is required for simulator-backed tests")
    return ScenarioScript.load(script_path)


@main.command()
@graph_option
@click.option("--facts", "facts_path", default=None, type=click.Path(exists=True))
def validate(graph_path, facts_path) -> None:
    """Structural validation; exit 0 iff the graph is sound."""
    wbg = _load_graph(graph_path)
    report = validate_graph(wbg, _load_facts(facts_path) or None)
    click.echo(json.dumps(report.to_json(), indent=2))
    if not report.ok:
        sys.exit(1)


@main.command(name="test-edge")
@graph_option
@script_option
@click.option("--edge", required=True, help="cause,effect node ids")
@click.option("--seed", default=0, type=int)
def test_edge(graph_path, script_path, edge, seed) -> None:
    """Counterfactual test of one cause->effect edge."""
    wbg = _load_graph(graph_path)
    try:
        cause, effect = edge.split(",", 1)
    except ValueError:
        raise click.ClickException("--edge wants 'cause,effect'") from None
    script = _need_script(script_path)
    try:
        verdict = counterfactual_test(wbg, (cause.strip(), effect.strip()), script, seed)
    except GraphError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps(verdict.to_json(), indent=2))
    if verdict.result == "fail":
        sys.exit(1)


@main.command(name="test-node")
@graph_option
@script_option
@click.option("--node", required=True)
@click.option("--seed", default=0, type=int)
def test_node(graph_path, script_path, node, seed) -> None:
    """Sufficiency test: do the node's causes jointly produce it?"""
    wbg = _load_graph(graph_path)
    script = _need_script(script_path)
    try:
        verdict = sufficiency_test(wbg, node, script, seed)
    except GraphError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps(verdict.to_json(), indent=2))
    if verdict.result == "fail":
        sys.exit(1)


@main.command()
@graph_option
def dot(graph_path) -> None:
    """Render the graph as deterministic DOT."""
    wbg = _load_graph(graph_path)
    try:
        click.echo(export_dot(wbg), nl=False)
    except GraphError as exc:
        raise click.ClickException(str(exc)) from None


@main.command()
@graph_option
@click.option("--facts", "facts_path", default=None, type=click.Path(exists=True))
@click.option("--verdicts", "verdicts_path", default=None, type=click.Path(exists=True))
@click.option(
    "--recommendations", "recs_path", default=None, type=click.Path(exists=True)
)
@click.option("--title", default="Investigation report")
def report(graph_path, facts_path, verdicts_path, recs_path, title) -> None:
    """Assemble the four-section investigation report (markdown)."""
    wbg = _load_graph(graph_path)
    facts = _load_facts(facts_path)
    verdicts = (
        [TestVerdict.from_json(doc) for doc in json.loads(Path(verdicts_path).read_text())]
        if verdicts_path
        else []
    )
    recs = (
        [Recommendation.from_json(doc) for doc in json.loads(Path(recs_path).read_text())]
        if recs_path
        else []
    )
    try:
        doc = investigation_report(wbg, facts, verdicts, recs, title=title)
    except GraphError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(doc["markdown"])
