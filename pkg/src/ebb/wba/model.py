"""Why-because analysis documents: facts, factor nodes, graphs, verdicts.

The graph JSON is the single source of truth:

    {"version": 1,
     "nodes": [{"id", "kind", "label", "fact_refs", "sim_binding"}],
     "edges": [[cause_id, effect_id], ...],
     "topnodes": [ids]}

Node kinds: event, unevent, state, process, mishap. Mishap nodes are
the topnodes (and only they may be); every other node must lie on a
causal path into some topnode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

WBG_VERSION = 1

NODE_KINDS = ("event", "unevent", "state", "process", "mishap")
FACT_SOURCES = ("witness", "ebb", "forensic", "document")
CONFIDENCE_LEVELS = ("corroborated", "testimony-only")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Fact:
    id: str
    statement: str
    source: str  # witness | ebb | forensic | document
    confidence: str = "testimony-only"
    record_refs: tuple[int, ...] = ()

    def validate(self) -> None:
        if self.source not in FACT_SOURCES:
            raise GraphError(f"fact {self.id}: unknown source {self.source!r}")
        if self.confidence not in CONFIDENCE_LEVELS:
            raise GraphError(f"fact {self.id}: unknown confidence {self.confidence!r}")
        if self.source == "ebb" and not self.record_refs:
            raise GraphError(f"fact {self.id}: ebb-sourced facts need record_refs")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "statement": self.statement,
            "source": self.source,
            "confidence": self.confidence,
            "record_refs": list(self.record_refs),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Fact":
        fact = cls(
            id=doc["id"],
            statement=doc["statement"],
            source=doc["source"],
            confidence=doc.get("confidence", "testimony-only"),
            record_refs=tuple(doc.get("record_refs") or ()),
        )
        fact.validate()
        return fact


@dataclass(frozen=True)
class FactorNode:
    id: str
    kind: str  # event | unevent | state | process | mishap
    label: str
    fact_refs: tuple[str, ...] = ()
    sim_binding: str | None = None

    def validate(self) -> None:
        if self.kind not in NODE_KINDS:
            raise GraphError(f"node {self.id}: unknown kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "label": self.label,
            "fact_refs": list(self.fact_refs),
            "sim_binding": self.sim_binding,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FactorNode":
        node = cls(
            id=doc["id"],
            kind=doc["kind"],
            label=doc["label"],
            fact_refs=tuple(doc.get("fact_refs") or ()),
            sim_binding=doc.get("sim_binding"),
        )
        node.validate()
        return node


@dataclass
class WhyBecauseGraph:
    nodes: dict[str, FactorNode] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)  # (cause, effect)
    topnodes: list[str] = field(default_factory=list)

    def add_node(self, node: FactorNode) -> None:
        node.validate()
        self.nodes[node.id] = node
        if node.kind == "mishap" and node.id not in self.topnodes:
            self.topnodes.append(node.id)

    def remove_node(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise GraphError(f"unknown node {node_id}")
        del self.nodes[node_id]
        self.edges = [e for e in self.edges if node_id not in e]
        self.topnodes = [t for t in self.topnodes if t != node_id]

    def add_edge(self, cause: str, effect: str) -> None:
        if cause not in self.nodes:
            raise GraphError(f"unknown cause node {cause}")
        if effect not in self.nodes:
            raise GraphError(f"unknown effect node {effect}")
        if cause == effect:
            raise GraphError(f"self edge on {cause}")
        if (cause, effect) not in self.edges:
            self.edges.append((cause, effect))

    def remove_edge(self, cause: str, effect: str) -> None:
        try:
            self.edges.remove((cause, effect))
        except ValueError:
            raise GraphError(f"unknown edge {cause} -> {effect}") from None

    def causes_of(self, node_id: str) -> list[str]:
        return [c for c, e in self.edges if e == node_id]

    def effects_of(self, node_id: str) -> list[str]:
        return [e for c, e in self.edges if c == node_id]

    def has_edge(self, cause: str, effect: str) -> bool:
        return (cause, effect) in self.edges

    def find_cycle(self) -> list[str] | None:
        """One directed cycle as a node-id path, or None."""
        WHITE, GREY, BLACK = 0, 1, 2
        color = {n: WHITE for n in self.nodes}
        stack: list[str] = []

        def dfs(node: str) -> list[str] | None:
            color[node] = GREY
            stack.append(node)
            for nxt in self.effects_of(node):
                if nxt not in color:
                    continue
                if color[nxt] == GREY:
                    return stack[stack.index(nxt) :] + [nxt]
                if color[nxt] == WHITE:
                    found = dfs(nxt)
                    if found:
                        return found
            color[node] = BLACK
            stack.pop()
            return None

        for start in sorted(self.nodes):
            if color.get(start) == WHITE:
                found = dfs(start)
                if found:
                    return found
        return None

    def reaches_topnode(self, node_id: str) -> bool:
        seen = set()
        frontier = [node_id]
        tops = set(self.topnodes)
        while frontier:
            cur = frontier.pop()
            if cur in tops:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            frontier.extend(self.effects_of(cur))
        return False

    def to_json(self) -> dict:
        return {
            "version": WBG_VERSION,
            "nodes": [self.nodes[k].to_json() for k in sorted(self.nodes)],
            "edges": [list(e) for e in sorted(self.edges)],
            "topnodes": sorted(self.topnodes),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WhyBecauseGraph":
        if not isinstance(doc, dict):
            raise GraphError("graph document must be an object")
        if doc.get("version") != WBG_VERSION:
            raise GraphError(f"unsupported graph version {doc.get('version')!r}")
        graph = cls()
        for node_doc in doc.get("nodes", []):
            node = FactorNode.from_json(node_doc)
            if node.id in graph.nodes:
                raise GraphError(f"duplicate node id {node.id}")
            graph.nodes[node.id] = node
        for edge in doc.get("edges", []):
            if len(edge) != 2:
                raise GraphError(f"bad edge {edge!r}")
            graph.edges.append((edge[0], edge[1]))
        graph.topnodes = list(doc.get("topnodes", []))
        return graph

    @classmethod
    def load(cls, path: str | Path) -> "WhyBecauseGraph":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False  # not a pytest class, despite the name

    target: tuple[str, ...]  # ("edge", cause, effect) or ("node", id)
    test: str  # counterfactual | sufficiency
    mode: str  # simulated | attested
    result: str  # pass | fail | unknown
    justification: str = ""
    sim_trace_ref: str | None = None

    def validate(self) -> None:
        if self.test not in ("counterfactual", "sufficiency"):
            raise GraphError(f"unknown test {self.test!r}")
        if self.mode not in ("simulated", "attested"):
            raise GraphError(f"unknown mode {self.mode!r}")
        if self.result not in ("pass", "fail", "unknown"):
            raise GraphError(f"unknown result {self.result!r}")
        if self.mode == "simulated" and not self.sim_trace_ref:
            raise GraphError("simulated verdicts need a sim_trace_ref")
        if self.mode == "attested" and not self.justification.strip():
            raise GraphError("attested verdicts need a justification")

    def to_json(self) -> dict:
        return {
            "target": list(self.target),
            "test": self.test,
            "mode": self.mode,
            "result": self.result,
            "justification": self.justification,
            "sim_trace_ref": self.sim_trace_ref,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TestVerdict":
        verdict = cls(
            target=tuple(doc["target"]),
            test=doc["test"],
            mode=doc["mode"],
            result=doc["result"],
            justification=doc.get("justification", ""),
            sim_trace_ref=doc.get("sim_trace_ref"),
        )
        verdict.validate()
        return verdict

    @classmethod
    def for_edge(cls, cause: str, effect: str, **kw) -> "TestVerdict":
        return cls(target=("edge", cause, effect), test="counterfactual", **kw)

    @classmethod
    def for_node(cls, node_id: str, **kw) -> "TestVerdict":
        return cls(target=("node", node_id), test="sufficiency", **kw)


@dataclass(frozen=True)
class Recommendation:
    id: str
    priority: int  # 1 = highest
    text: str
    remedy_binding: str | None = None  # a Remedy kind, optionally with :param
    validated: bool = False

    def validate(self) -> None:
        if self.priority < 1:
            raise GraphError(f"recommendation {self.id}: priority must be >= 1")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "priority": self.priority,
            "text": self.text,
            "remedy_binding": self.remedy_binding,
            "validated": self.validated,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Recommendation":
        rec = cls(
            id=doc["id"],
            priority=int(doc["priority"]),
            text=doc["text"],
            remedy_binding=doc.get("remedy_binding"),
            validated=bool(doc.get("validated", False)),
        )
        rec.validate()
        return rec


def check_unique_priorities(recommendations: list[Recommendation]) -> None:
    seen: dict[int, str] = {}
    for rec in recommendations:
        rec.validate()
        if rec.priority in seen:
            raise GraphError(
                f"recommendations {seen[rec.priority]} and {rec.id} share "
                f"priority {rec.priority}"
            )
        seen[rec.priority] = rec.id
