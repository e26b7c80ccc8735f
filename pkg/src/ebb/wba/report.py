"""Investigation report assembly.

Sections follow the four working stages: information gathered, facts
and analysis, conclusions, remedies. Recommendations are listed by
priority with their simulator validation status (validated means the
bound remedy alone flips the unalarmed-fall mishap in re-simulation).
"""

from __future__ import annotations

import json

from ..sim.engine import evaluate_mishaps, run as sim_run
from ..sim.script import ScenarioScript, parse_remedy
from .model import (
    Fact,
    GraphError,
    Recommendation,
    TestVerdict,
    WhyBecauseGraph,
    check_unique_priorities,
)
from .validate import validate_graph


def validate_recommendations(
    recommendations: list[Recommendation],
    context: ScenarioScript,
    seed: int = 0,
) -> list[Recommendation]:
    """Re-run the scenario per bound remedy; validated = mishap prevented."""
    baseline = evaluate_mishaps(sim_run(context, seed=seed).outcome)
    out = []
    for rec in recommendations:
        validated = False
        if rec.remedy_binding and "Accident2" in baseline:
            remedy = parse_remedy(rec.remedy_binding)
            with_remedy = evaluate_mishaps(
                sim_run(context, seed=seed, remedies=(remedy,)).outcome
            )
            validated = "Accident2" not in with_remedy
        out.append(
            Recommendation(
                id=rec.id,
                priority=rec.priority,
                text=rec.text,
                remedy_binding=rec.remedy_binding,
                validated=validated,
            )
        )
    return out


def _verdict_line(verdict: TestVerdict) -> str:
    if verdict.target[0] == "edge":
        subject = f"edge {verdict.target[1]} -> {verdict.target[2]}"
    else:
        subject = f"node {verdict.target[1]}"
    return (
        f"- {subject}: {verdict.test} {verdict.result.upper()} "
        f"({verdict.mode}) {verdict.justification}"
    )


def investigation_report(
    wbg: WhyBecauseGraph,
    facts: list[Fact],
    verdicts: list[TestVerdict],
    recommendations: list[Recommendation],
    title: str = "Investigation report",
) -> dict:
    """Assemble the report document; returns {markdown, sections...}."""
    validation = validate_graph(wbg, facts)
    if not validation.ok:
        raise GraphError(
            "refusing to report on an invalid graph: "
            + "; ".join(v.message for v in validation.violations)
        )
    check_unique_priorities(recommendations)
    by_source: dict[str, list[Fact]] = {}
    for fact in facts:
        by_source.setdefault(fact.source, []).append(fact)

    lines = [f"# {title}", ""]
    lines += ["## 1. Information gathered", ""]
    for source in ("witness", "ebb", "forensic", "document"):
        group = by_source.get(source, [])
        if not group:
            continue
        lines.append(f"### {source} evidence")
        for fact in group:
            refs = ""
            if fact.record_refs:
                refs = f" (records {', '.join(map(str, fact.record_refs))})"
            lines.append(f"- {fact.id}: {fact.statement} [{fact.confidence}]{refs}")
        lines.append("")

    lines += ["## 2. Facts and analysis", ""]
    lines.append(
        f"The why-because graph has {len(wbg.nodes)} factor nodes, "
        f"{len(wbg.edges)} causal edges and {len(wbg.topnodes)} mishap "
        f"topnode(s): {', '.join(sorted(wbg.topnodes))}."
    )
    lines.append("")
    if verdicts:
        lines.append("Causal quality checks:")
        for verdict in verdicts:
            lines.append(_verdict_line(verdict))
        lines.append("")

    lines += ["## 3. Conclusions", ""]
    for top in sorted(wbg.topnodes):
        causes = sorted(wbg.causes_of(top))
        lines.append(
            f"- {wbg.nodes[top].label}: directly caused by "
            f"{', '.join(wbg.nodes[c].label for c in causes) or 'no recorded causes'}."
        )
    lines.append("")

    lines += ["## 4. Remedies", ""]
    ordered = sorted(recommendations, key=lambda r: r.priority)
    if not ordered:
        lines.append("No remedies proposed.")
    for rec in ordered:
        status = "validated in simulation" if rec.validated else "not validated"
        binding = f" [remedy: {rec.remedy_binding}]" if rec.remedy_binding else ""
        lines.append(f"{rec.priority}. {rec.text}{binding} ({status})")
    lines.append("")

    markdown = "\n".join(lines)
    return {
        "title": title,
        "markdown": markdown,
        "topnodes": sorted(wbg.topnodes),
        "fact_count": len(facts),
        "verdicts": [v.to_json() for v in verdicts],
        "recommendations": [r.to_json() for r in ordered],
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
