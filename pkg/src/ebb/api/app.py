"""HTTP service exposing extraction, simulation and analysis operations.

Every endpoint is a thin adapter over the corresponding module
operation; no causal or format logic lives here. Reads re-open the
committed log files, so they are safe to run while a recorder writes.
Errors come back as a structured body: {"detail": {"code", "message",
...}} with 400 for malformed input, 404 for unknown cases or nodes,
409 for validation conflicts, and 500 otherwise.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .. import extraction
from ..recorder import read_log
from ..sim.engine import run as sim_run
from ..sim.script import ScenarioScript, ScriptError, parse_remedy
from ..wba.dot import export_dot
from ..wba.model import (
    GraphError,
    Recommendation,
    WhyBecauseGraph,
    check_unique_priorities,
)
from ..wba.causal import counterfactual_test, sufficiency_test
from ..wba.report import investigation_report
from ..wba.validate import validate_graph
from .store import Case, CaseStore, CaseStoreError, UnknownCaseError

logger = logging.getLogger(__name__)

# Violations that block a PUT; staging states (missing facts, not yet
# linked nodes) are tolerated so the editor can build a graph up.
HARD_VIOLATIONS = {
    "cycle",
    "dangling-edge",
    "self-edge",
    "bad-node",
    "dangling-topnode",
    "topnode-not-mishap",
    "mishap-not-topnode",
    "topnode-outgoing",
}


def _bad_request(message: str, **extra) -> HTTPException:
    return HTTPException(400, {"code": "malformed", "message": message, **extra})


def _not_found(message: str, **extra) -> HTTPException:
    return HTTPException(404, {"code": "not-found", "message": message, **extra})


def _conflict(message: str, **extra) -> HTTPException:
    return HTTPException(409, {"code": "validation-conflict", "message": message, **extra})


class CreateCaseBody(BaseModel):
    case_id: str
    log_dir: str | None = None
    script_path: str | None = None


class RunSimBody(BaseModel):
    remedies: list[str] = Field(default_factory=list)
    seed: int = 0


class TestEdgeBody(BaseModel):
    cause: str
    effect: str
    seed: int = 0


class TestNodeBody(BaseModel):
    node: str
    seed: int = 0


def build_app(case_store_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    store = CaseStore(case_store_dir)
    app = FastAPI(title="investigation-api", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception):
        logger.exception("unhandled error on %s", request.url.path)
        return JSONResponse(
            status_code=500,
            content={"detail": {"code": "internal", "message": str(exc)}},
        )

    def get_case(case_id: str) -> Case:
        try:
            return store.load(case_id)
        except UnknownCaseError:
            raise _not_found(f"unknown case {case_id}") from None
        except CaseStoreError as exc:
            raise HTTPException(
                500, {"code": "corrupt-case-store", "message": str(exc)}
            ) from None

    def case_records(case: Case):
        if not case.log_dir:
            raise _bad_request(f"case {case.case_id} has no log_dir")
        try:
            return read_log(case.log_dir).records
        except Exception as exc:
            raise _bad_request(f"cannot read log: {exc}") from None

    def case_script(case: Case) -> ScenarioScript:
        if not case.script_path:
            raise _bad_request(f"case {case.case_id} has no script")
        try:
            return ScenarioScript.load(case.script_path)
        except ScriptError as exc:
            raise _bad_request(str(exc)) from None

    def parse_window(from_: str | None, to: str | None) -> tuple[int | None, int | None]:
        try:
            from_ms = extraction.iso_to_wall_ms(from_) if from_ else None
            to_ms = extraction.iso_to_wall_ms(to) if to else None
        except ValueError as exc:
            raise _bad_request(f"bad timestamp: {exc}") from None
        return from_ms, to_ms

    # -- cases -------------------------------------------------------------

    @app.get("/cases")
    def list_cases() -> list[str]:
        return store.list_cases()

    @app.post("/cases", status_code=201)
    def create_case(body: CreateCaseBody) -> dict:
        case = Case(
            case_id=body.case_id,
            log_dir=body.log_dir,
            script_path=body.script_path,
        )
        try:
            store.create(case)
        except CaseStoreError as exc:
            raise _conflict(str(exc)) from None
        return case.to_json()

    @app.get("/cases/{case_id}")
    def show_case(case_id: str) -> dict:
        return get_case(case_id).to_json()

    # -- telemetry reads -----------------------------------------------------

    @app.get("/cases/{case_id}/records")
    def records(
        case_id: str,
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = None,
        channel: str | None = None,
        format: str = "json",
    ):
        case = get_case(case_id)
        recs = case_records(case)
        from_ms, to_ms = parse_window(from_, to)
        tag = None
        if channel:
            try:
                tag = extraction.ChannelTag.from_name(channel)
            except ValueError as exc:
                raise _bad_request(str(exc)) from None
        if format == "csv":
            return PlainTextResponse(
                extraction.export_csv(recs, from_ms, to_ms, tag), media_type="text/csv"
            )
        selected = extraction.select_records(recs, from_ms, to_ms, tag)
        return [extraction.record_row(r) for r in selected]

    @app.get("/cases/{case_id}/gaps")
    def gaps(
        case_id: str,
        channel: str = extraction.SESSION_MARKERS,
        min_gap_ms: int = 2000,
    ) -> list[dict]:
        case = get_case(case_id)
        recs = case_records(case)
        try:
            found = extraction.detect_gaps(recs, channel, min_gap_ms * 1_000_000)
        except ValueError as exc:
            raise _bad_request(str(exc)) from None
        return [g.to_json() for g in found]

    @app.get("/cases/{case_id}/unevents")
    def unevents(case_id: str) -> list[dict]:
        case = get_case(case_id)
        recs = case_records(case)
        findings = extraction.scan_unevents(recs, case.unevent_specs)
        return [f.to_json() for f in findings]

    # -- facts ---------------------------------------------------------------

    @app.get("/cases/{case_id}/facts")
    def get_facts(case_id: str) -> list[dict]:
        return [f.to_json() for f in get_case(case_id).facts]

    @app.put("/cases/{case_id}/facts")
    def put_facts(case_id: str, body: list[dict]) -> list[dict]:
        get_case(case_id)
        try:
            from ..wba.model import Fact

            facts = [Fact.from_json(doc) for doc in body]
        except (GraphError, KeyError, TypeError) as exc:
            raise _bad_request(f"bad fact: {exc}") from None

        def apply(case: Case) -> None:
            case.facts = facts

        store.mutate(case_id, apply)
        return [f.to_json() for f in facts]

    # -- why-because graph -----------------------------------------------------

    @app.get("/cases/{case_id}/wbg")
    def get_wbg(case_id: str) -> dict:
        return get_case(case_id).wbg.to_json()

    @app.put("/cases/{case_id}/wbg")
    def put_wbg(case_id: str, body: dict) -> dict:
        case = get_case(case_id)
        try:
            wbg = WhyBecauseGraph.from_json(body)
        except GraphError as exc:
            raise _bad_request(str(exc)) from None
        report = validate_graph(wbg, case.facts or None)
        hard = [v for v in report.violations if v.code in HARD_VIOLATIONS]
        if hard:
            raise _conflict(
                "graph violates structural invariants",
                violations=[v.to_json() for v in hard],
            )

        def apply(case: Case) -> None:
            case.wbg = wbg

        store.mutate(case_id, apply)
        return wbg.to_json()

    @app.post("/cases/{case_id}/wbg/validate")
    def wbg_validate(case_id: str) -> dict:
        case = get_case(case_id)
        report = validate_graph(case.wbg, case.facts or None)
        return report.to_json()

    @app.post("/cases/{case_id}/wbg/test-edge")
    def wbg_test_edge(case_id: str, body: TestEdgeBody) -> dict:
        case = get_case(case_id)
        script = case_script(case)
        if body.cause not in case.wbg.nodes or body.effect not in case.wbg.nodes:
            raise _not_found("unknown node in edge")
        try:
            verdict = counterfactual_test(
                case.wbg, (body.cause, body.effect), script, seed=body.seed
            )
        except GraphError as exc:
            raise _bad_request(str(exc)) from None

        def apply(case: Case) -> None:
            case.verdicts = [
                v for v in case.verdicts if v.target != verdict.target
            ] + [verdict]

        store.mutate(case_id, apply)
        return verdict.to_json()

    @app.post("/cases/{case_id}/wbg/test-node")
    def wbg_test_node(case_id: str, body: TestNodeBody) -> dict:
        case = get_case(case_id)
        script = case_script(case)
        if body.node not in case.wbg.nodes:
            raise _not_found(f"unknown node {body.node}")
        try:
            verdict = sufficiency_test(case.wbg, body.node, script, seed=body.seed)
        except GraphError as exc:
            raise _bad_request(str(exc)) from None

        def apply(case: Case) -> None:
            case.verdicts = [
                v for v in case.verdicts if v.target != verdict.target
            ] + [verdict]

        store.mutate(case_id, apply)
        return verdict.to_json()

    @app.get("/cases/{case_id}/wbg.dot")
    def wbg_dot(case_id: str) -> PlainTextResponse:
        case = get_case(case_id)
        try:
            dot = export_dot(case.wbg)
        except GraphError as exc:
            raise _conflict(str(exc)) from None
        return PlainTextResponse(dot, media_type="text/vnd.graphviz")

    @app.get("/cases/{case_id}/verdicts")
    def get_verdicts(case_id: str) -> list[dict]:
        return [v.to_json() for v in get_case(case_id).verdicts]

    # -- simulation -------------------------------------------------------------

    @app.post("/cases/{case_id}/sim/run")
    def sim_run_endpoint(case_id: str, body: RunSimBody) -> dict:
        case = get_case(case_id)
        script = case_script(case)
        try:
            remedies = tuple(parse_remedy(r) for r in body.remedies)
        except ScriptError as exc:
            raise _bad_request(str(exc)) from None
        result = sim_run(script, seed=body.seed, remedies=remedies)
        return result.outcome.to_json()

    # -- recommendations -----------------------------------------------------

    @app.get("/cases/{case_id}/recommendations")
    def get_recommendations(case_id: str) -> list[dict]:
        return [r.to_json() for r in get_case(case_id).recommendations]

    @app.put("/cases/{case_id}/recommendations")
    def put_recommendations(case_id: str, body: list[dict]) -> list[dict]:
        get_case(case_id)
        try:
            recs = [Recommendation.from_json(doc) for doc in body]
            check_unique_priorities(recs)
        except (GraphError, KeyError, TypeError) as exc:
            raise _conflict(f"bad recommendations: {exc}") from None

        def apply(case: Case) -> None:
            case.recommendations = recs

        store.mutate(case_id, apply)
        return [r.to_json() for r in recs]

    # -- report ---------------------------------------------------------------

    @app.get("/cases/{case_id}/report")
    def report(case_id: str) -> dict:
        case = get_case(case_id)
        try:
            return investigation_report(
                case.wbg,
                case.facts,
                case.verdicts,
                case.recommendations,
                title=f"Investigation report: {case.case_id}",
            )
        except GraphError as exc:
            raise _conflict(str(exc)) from None

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
