"""DOT rendering of a validated why-because graph.

Deterministic output: nodes sorted by id, edges sorted, fixed style
table. Node shape encodes the factor kind; mishap topnodes get the
doubleoctagon plus fill so they stand out in any renderer.
"""

from __future__ import annotations

from .model import GraphError, WhyBecauseGraph
from .validate import validate_graph

_KIND_STYLE = {
    "mishap": 'shape=doubleoctagon, style="bold,filled", fillcolor="#f4cccc"',
    "event": "shape=box",
    "unevent": 'shape=box, style=dashed',
    "state": "shape=ellipse",
    "process": "shape=hexagon",
}


def _quote(text: str) -> str:
    # Quotes are the hazard in analyst text; \n stays a DOT line break.
    return '"' + text.replace('"', '\\"') + '"'


def export_dot(wbg: WhyBecauseGraph) -> str:
    report = validate_graph(wbg)
    if not report.ok:
        raise GraphError(
            "refusing to render an invalid graph: "
            + "; ".join(v.message for v in report.violations)
        )
    lines = [
        "digraph wbg {",
        "  rankdir=BT;",
        '  node [fontname="Helvetica", fontsize=10];',
    ]
    for node_id in sorted(wbg.nodes):
        node = wbg.nodes[node_id]
        label = f"{node.label}\\n[{node.kind}]"
        lines.append(
            f"  {_quote(node_id)} [label={_quote(label)}, {_KIND_STYLE[node.kind]}];"
        )
    for cause, effect in sorted(wbg.edges):
        lines.append(f"  {_quote(cause)} -> {_quote(effect)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
