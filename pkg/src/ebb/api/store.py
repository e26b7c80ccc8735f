"""On-disk investigation case store.

One directory per case holding a single case.json document with the
fact ledger, the why-because graph, the verdict ledger, recommendations
and references to the telemetry log and scenario script. Every mutation
rewrites the document via temp-then-rename, so a crash between
mutations never leaves a half-written case.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..extraction import ExpectationSpec
from ..wba.model import Fact, Recommendation, TestVerdict, WhyBecauseGraph

CASE_FILE = "case.json"
_CASE_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class CaseStoreError(ValueError):
    pass


class UnknownCaseError(KeyError):
    pass


@dataclass
class Case:
    case_id: str
    log_dir: str | None = None
    script_path: str | None = None
    created_wall_ms: int = 0
    facts: list[Fact] = field(default_factory=list)
    wbg: WhyBecauseGraph = field(default_factory=WhyBecauseGraph)
    verdicts: list[TestVerdict] = field(default_factory=list)
    recommendations: list[Recommendation] = field(default_factory=list)
    unevent_specs: list[ExpectationSpec] = field(default_factory=list)
    ui_annotations: dict = field(default_factory=dict)  # opaque to the engine

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "log_dir": self.log_dir,
            "script_path": self.script_path,
            "created_wall_ms": self.created_wall_ms,
            "facts": [f.to_json() for f in self.facts],
            "wbg": self.wbg.to_json(),
            "verdicts": [v.to_json() for v in self.verdicts],
            "recommendations": [r.to_json() for r in self.recommendations],
            "unevent_specs": [s.to_json() for s in self.unevent_specs],
            "ui_annotations": self.ui_annotations,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Case":
        try:
            return cls(
                case_id=doc["case_id"],
                log_dir=doc.get("log_dir"),
                script_path=doc.get("script_path"),
                created_wall_ms=int(doc.get("created_wall_ms", 0)),
                facts=[Fact.from_json(f) for f in doc.get("facts", [])],
                wbg=WhyBecauseGraph.from_json(
                    doc.get("wbg") or {"version": 1, "nodes": [], "edges": [], "topnodes": []}
                ),
                verdicts=[TestVerdict.from_json(v) for v in doc.get("verdicts", [])],
                recommendations=[
                    Recommendation.from_json(r) for r in doc.get("recommendations", [])
                ],
                unevent_specs=[
                    ExpectationSpec.from_json(s) for s in doc.get("unevent_specs", [])
                ],
                ui_annotations=doc.get("ui_annotations") or {},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CaseStoreError(f"corrupt case document: {exc}") from None


class CaseStore:
    """Directory of cases with per-case mutation serialization."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, case_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(case_id, threading.Lock())

    def _case_path(self, case_id: str) -> Path:
        if not _CASE_ID_RE.match(case_id):
            raise CaseStoreError(f"invalid case id {case_id!r}")
        return self.root / case_id / CASE_FILE

    def list_cases(self) -> list[str]:
        out = []
        for child in sorted(self.root.iterdir()):
            if child.is_dir() and (child / CASE_FILE).exists():
                out.append(child.name)
        return out

    def exists(self, case_id: str) -> bool:
        try:
            return self._case_path(case_id).exists()
        except CaseStoreError:
            return False

    def create(self, case: Case) -> Case:
        path = self._case_path(case.case_id)
        if path.exists():
            raise CaseStoreError(f"case {case.case_id} already exists")
        for ref, kind in ((case.log_dir, "log_dir"), (case.script_path, "script")):
            if ref and not Path(ref).exists():
                raise CaseStoreError(f"{kind} path does not exist: {ref}")
        if not case.created_wall_ms:
            case.created_wall_ms = int(time.time() * 1000)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._write(path, case)
        return case

    def load(self, case_id: str) -> Case:
        path = self._case_path(case_id)
        if not path.exists():
            raise UnknownCaseError(case_id)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CaseStoreError(f"unreadable case {case_id}: {exc}") from None
        return Case.from_json(doc)

    def save(self, case: Case) -> None:
        path = self._case_path(case.case_id)
        if not path.exists():
            raise UnknownCaseError(case.case_id)
        self._write(path, case)

    def mutate(self, case_id: str, fn) -> Case:
        """Load-modify-save under the case's mutation lock."""
        with self._lock_for(case_id):
            case = self.load(case_id)
            fn(case)
            self.save(case)
            return case

    @staticmethod
    def _write(path: Path, case: Case) -> None:
        tmp = path.with_name(path.name + ".tmp")
        data = json.dumps(case.to_json(), indent=2, sort_keys=True)
        with open(tmp, "w") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
