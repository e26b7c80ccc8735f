"""Causal quality checks: per-edge counterfactual and per-node sufficiency.

A counterfactual test of edge (cause -> effect) passes when, in the
nearest scripted world with the cause negated, the effect's observable
no longer occurs. A sufficiency test of a node passes when a run with
all of its listed causes asserted produces the node's observable.

Both run simulated when every needed factor binding offers the right
capability; otherwise the verdict is unknown until an analyst records
an attestation with a written justification.
"""

from __future__ import annotations

from ..sim.engine import run as sim_run
from ..sim.factors import FACTORS
from ..sim.script import ScenarioScript
from ..sim.engine import run_id_for
from .model import Fact, GraphError, TestVerdict, WhyBecauseGraph


def build_why_because_list(
    facts: list[Fact], pairs: list[tuple[str, str]]
) -> list[tuple[str, str]]:
    """Record analyst-proposed (cause fact, effect fact) pairs.

    This is a structured editor action: pairs are recorded, never
    inferred. Raises on a pair citing an unknown fact.
    """
    if not facts:
        raise GraphError("need at least one fact")
    known = {f.id for f in facts}
    out: list[tuple[str, str]] = []
    for cause, effect in pairs:
        if cause not in known:
            raise GraphError(f"pair cites unknown fact {cause}")
        if effect not in known:
            raise GraphError(f"pair cites unknown fact {effect}")
        if (cause, effect) not in out:
            out.append((cause, effect))
    return out


def counterfactual_test(
    wbg: WhyBecauseGraph,
    edge: tuple[str, str],
    context: ScenarioScript,
    seed: int = 0,
) -> TestVerdict:
    """Would the effect still occur had the cause not? Pass when not."""
    cause_id, effect_id = edge
    if cause_id == effect_id:
        raise GraphError("self edges are never causal (acyclicity)")
    if not wbg.has_edge(cause_id, effect_id):
        raise GraphError(f"unknown edge {cause_id} -> {effect_id}")
    cause = wbg.nodes[cause_id]
    effect = wbg.nodes[effect_id]
    cause_factor = FACTORS.get(cause.sim_binding) if cause.sim_binding else None
    effect_factor = FACTORS.get(effect.sim_binding) if effect.sim_binding else None
    if (
        cause_factor is None
        or effect_factor is None
        or not cause_factor.can_negate
    ):
        return TestVerdict.for_edge(
            cause_id,
            effect_id,
            mode="attested",
            result="unknown",
            justification=(
                "no scripted negation for this cause; awaiting analyst attestation"
            ),
        )
    try:
        edited = cause_factor.negate(context)
        result = sim_run(edited, seed=seed)
    except Exception as exc:
        return TestVerdict.for_edge(
            cause_id,
            effect_id,
            mode="attested",
            result="unknown",
            justification=f"simulation failed: {exc}",
        )
    effect_occurred = effect_factor.observe(result.outcome)
    return TestVerdict.for_edge(
        cause_id,
        effect_id,
        mode="simulated",
        result="pass" if not effect_occurred else "fail",
        justification=(
            f"negated {cause_factor.name}; {effect_factor.name} "
            f"{'still occurred' if effect_occurred else 'did not occur'}"
        ),
        sim_trace_ref=result.outcome.run_id,
    )


def sufficiency_test(
    wbg: WhyBecauseGraph,
    node_id: str,
    context: ScenarioScript,
    seed: int = 0,
) -> TestVerdict:
    """Do the node's listed causes jointly suffice to produce it?"""
    if node_id not in wbg.nodes:
        raise GraphError(f"unknown node {node_id}")
    causes = wbg.causes_of(node_id)
    if not causes:
        raise GraphError(f"node {node_id} lists no causes to test")
    node = wbg.nodes[node_id]
    node_factor = FACTORS.get(node.sim_binding) if node.sim_binding else None
    if node_factor is None:
        return TestVerdict.for_node(
            node_id,
            mode="attested",
            result="unknown",
            justification="node has no sim binding; awaiting analyst attestation",
        )
    unbound = []
    for cause_id in causes:
        cause = wbg.nodes[cause_id]
        factor = FACTORS.get(cause.sim_binding) if cause.sim_binding else None
        if factor is None or not factor.can_assert:
            unbound.append(cause_id)
    if unbound:
        return TestVerdict.for_node(
            node_id,
            mode="attested",
            result="unknown",
            justification=(
                f"causes without assertable bindings: {', '.join(sorted(unbound))}"
            ),
        )
    script = context
    for cause_id in sorted(causes):
        script = FACTORS[wbg.nodes[cause_id].sim_binding].assert_(script)
    try:
        result = sim_run(script, seed=seed)
    except Exception as exc:
        return TestVerdict.for_node(
            node_id,
            mode="attested",
            result="unknown",
            justification=f"simulation failed: {exc}",
        )
    occurred = node_factor.observe(result.outcome)
    return TestVerdict.for_node(
        node_id,
        mode="simulated",
        result="pass" if occurred else "fail",
        justification=(
            f"asserted {len(causes)} cause(s); {node_factor.name} "
            f"{'occurred' if occurred else 'did not occur'}"
        ),
        sim_trace_ref=result.outcome.run_id,
    )


def attest(
    target: tuple[str, ...],
    test: str,
    result: str,
    justification: str,
) -> TestVerdict:
    """Record an analyst attestation for a factor outside the sim's world."""
    verdict = TestVerdict(
        target=target,
        test=test,
        mode="attested",
        result=result,
        justification=justification,
    )
    verdict.validate()
    return verdict


def context_run_id(context: ScenarioScript, seed: int = 0) -> str:
    return run_id_for(context, seed, ())
