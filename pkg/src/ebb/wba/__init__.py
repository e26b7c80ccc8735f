from .model import (
    Fact,
    FactorNode,
    GraphError,
    Recommendation,
    TestVerdict,
    WhyBecauseGraph,
)
from .validate import ValidationReport, Violation, validate_graph
from .causal import (
    attest,
    build_why_because_list,
    counterfactual_test,
    sufficiency_test,
)
from .dot import export_dot
from .report import investigation_report, validate_recommendations
from .rose_fixture import rose_attestations, rose_case

__all__ = [
    "Fact",
    "FactorNode",
    "GraphError",
    "Recommendation",
    "TestVerdict",
    "ValidationReport",
    "Violation",
    "WhyBecauseGraph",
    "attest",
    "build_why_because_list",
    "counterfactual_test",
    "export_dot",
    "investigation_report",
    "rose_attestations",
    "rose_case",
    "sufficiency_test",
    "validate_graph",
    "validate_recommendations",
]
