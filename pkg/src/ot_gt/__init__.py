"""Additive-error optimal transport by a single scale of Gabow-Tarjan."""

from .api import SolveResult, solve
from .core import (
    PlanKind,
    RunStats,
    SolveConfig,
    TransportInstance,
    TransportPlan,
    classify_plan,
    load_instance,
    plan_cost,
    validate_instance,
)

__all__ = [
    "PlanKind",
    "RunStats",
    "SolveConfig",
    "SolveResult",
    "TransportInstance",
    "TransportPlan",
    "classify_plan",
    "load_instance",
    "plan_cost",
    "solve",
    "validate_instance",
]
