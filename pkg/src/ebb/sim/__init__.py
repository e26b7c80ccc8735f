from .script import (
    FaultInjection,
    Remedy,
    ResidentPlan,
    RobotPlan,
    ScenarioScript,
    ScriptError,
    apply_fault,
    parse_remedy,
)
from .engine import (
    MishapOutcome,
    SimResult,
    TraceEvent,
    counterfactual_run,
    evaluate_mishaps,
    run,
)
from .factors import FACTORS, SimFactor, UnknownFactorError
from .rose import rose_baseline_script, ROSE_UNEVENT_SPECS

__all__ = [
    "FACTORS",
    "FaultInjection",
    "MishapOutcome",
    "Remedy",
    "ResidentPlan",
    "RobotPlan",
    "ROSE_UNEVENT_SPECS",
    "ScenarioScript",
    "ScriptError",
    "SimFactor",
    "SimResult",
    "TraceEvent",
    "UnknownFactorError",
    "apply_fault",
    "counterfactual_run",
    "evaluate_mishaps",
    "parse_remedy",
    "rose_baseline_script",
    "run",
]
