"""Structural validation of why-because graphs.

Machine-checkable correctness: acyclicity, endpoint existence, the
mishap/topnode correspondence, reachability of every factor into a
topnode, and the every-node-cites-a-fact rule. Dangling fact refs are
checked when a fact ledger is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Fact, WhyBecauseGraph


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subjects: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "subjects": list(self.subjects)}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    topnode_count: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "topnodes": self.topnode_count,
            "violations": [v.to_json() for v in self.violations],
        }


def validate_graph(
    wbg: WhyBecauseGraph, facts: list[Fact] | None = None
) -> ValidationReport:
    report = ValidationReport(topnode_count=len(wbg.topnodes))
    bad = report.violations

    for node_id in sorted(wbg.nodes):
        node = wbg.nodes[node_id]
        try:
            node.validate()
        except ValueError as exc:
            bad.append(Violation("bad-node", str(exc), (node_id,)))
        if not node.fact_refs:
            bad.append(
                Violation(
                    "missing-facts",
                    f"node {node_id} cites no facts",
                    (node_id,),
                )
            )

    for cause, effect in wbg.edges:
        for end in (cause, effect):
            if end not in wbg.nodes:
                bad.append(
                    Violation(
                        "dangling-edge",
                        f"edge ({cause} -> {effect}) references unknown node {end}",
                        (cause, effect),
                    )
                )
        if cause == effect:
            bad.append(Violation("self-edge", f"self edge on {cause}", (cause,)))

    tops = set(wbg.topnodes)
    for top in sorted(tops):
        if top not in wbg.nodes:
            bad.append(Violation("dangling-topnode", f"unknown topnode {top}", (top,)))
        elif wbg.nodes[top].kind != "mishap":
            bad.append(
                Violation(
                    "topnode-not-mishap",
                    f"topnode {top} has kind {wbg.nodes[top].kind}",
                    (top,),
                )
            )
    for node_id in sorted(wbg.nodes):
        node = wbg.nodes[node_id]
        if node.kind == "mishap" and node_id not in tops:
            bad.append(
                Violation(
                    "mishap-not-topnode",
                    f"mishap node {node_id} is not listed as a topnode",
                    (node_id,),
                )
            )
    for top in sorted(tops & set(wbg.nodes)):
        outgoing = wbg.effects_of(top)
        if outgoing:
            bad.append(
                Violation(
                    "topnode-outgoing",
                    f"topnode {top} is drawn as a cause of {sorted(outgoing)}",
                    (top, *sorted(outgoing)),
                )
            )

    cycle = wbg.find_cycle()
    if cycle:
        bad.append(
            Violation(
                "cycle",
                "cycle: " + " -> ".join(cycle),
                tuple(cycle),
            )
        )
    else:
        for node_id in sorted(wbg.nodes):
            if node_id in tops:
                continue
            if not wbg.reaches_topnode(node_id):
                bad.append(
                    Violation(
                        "unreachable-node",
                        f"node {node_id} lies on no path to any topnode",
                        (node_id,),
                    )
                )

    if facts is not None:
        known = {f.id for f in facts}
        for node_id in sorted(wbg.nodes):
            for ref in wbg.nodes[node_id].fact_refs:
                if ref not in known:
                    bad.append(
                        Violation(
                            "dangling-fact-ref",
                            f"node {node_id} cites unknown fact {ref}",
                            (node_id, ref),
                        )
                    )
    return report
