"""Domain types, instance validation and plan evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np


class TransportError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TransportError, ValueError):
    """The input does not describe a valid transport instance."""


class NegativeValue(ValidationError):
    pass


class SupplyExceedsDemand(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InternalError(TransportError, RuntimeError):
    """An algorithmic invariant was violated. Always a bug, never bad input."""


class InvariantViolation(InternalError):
    pass


class PlanKind(str, Enum):
    INFEASIBLE = "infeasible"
    FEASIBLE = "feasible"
    MAXIMUM = "maximum"


@dataclass(frozen=True)
class TransportInstance:
    """Demands on A, supplies on B and a dense |A| x |B| cost matrix.

    Arrays are copied and made read-only, so an instance can be shared
    freely between solver runs.
    """

    demands: np.ndarray
    supplies: np.ndarray
    costs: np.ndarray

    def __post_init__(self) -> None:
        for name in ("demands", "supplies", "costs"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_a(self) -> int:
        return int(self.demands.shape[0])

    @property
    def n_b(self) -> int:
        return int(self.supplies.shape[0])

    @property
    def n(self) -> int:
        return self.n_a + self.n_b

    @property
    def max_cost(self) -> float:
        return float(self.costs.max()) if self.costs.size else 0.0

    @property
    def total_supply(self) -> float:
        return float(self.supplies.sum())

    @property
    def total_demand(self) -> float:
        return float(self.demands.sum())


@dataclass(frozen=True)
class TransportPlan:
    flow: np.ndarray
    kind: str = "raw"

    def __post_init__(self) -> None:
        arr = np.array(self.flow, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "flow", arr)


@dataclass(frozen=True)
class SolveConfig:
    delta: float
    epsilon: float = 0.5
    debug_assertions: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.delta > 0.0:
            raise ValidationError(f"delta must be positive, got {self.delta}")

    @property
    def delta_prime(self) -> float:
        return (1.0 - self.epsilon) * self.delta


@dataclass
class RunStats:
    """Counters collected by one solver run.

    ``sum_half_ceil`` is the sum of ceil(|P|/2) over all augmenting paths,
    which is what the path-length bound ``path_bound`` controls.
    """

    phases: int = 0
    paths: int = 0
    sum_path_edges: int = 0
    sum_half_ceil: int = 0
    phase_bound: int = 0
    path_bound: int = 0
    total_supply: int = 0
    dijkstra_edge_visits: int = 0
    dfs_edge_visits: int = 0
    augment_edge_updates: int = 0
    t_search_ms: float = 0.0
    t_dfs_ms: float = 0.0
    t_augment_ms: float = 0.0
    t_total_ms: float = 0.0

    TIMING_FIELDS = ("t_search_ms", "t_dfs_ms", "t_augment_ms", "t_total_ms")

    def to_dict(self, timings: bool = True) -> dict[str, Any]:
        out = {k: v for k, v in self.__dict__.items()}
        if not timings:
            for k in self.TIMING_FIELDS:
                out.pop(k)
        return out

    def check_bounds(self) -> None:
        if self.phases > self.phase_bound:
            raise InvariantViolation(
                f"phase count {self.phases} exceeds bound {self.phase_bound}")
        if self.sum_half_ceil > self.path_bound:
            raise InvariantViolation(
                f"sum of ceil(|P|/2) = {self.sum_half_ceil} exceeds bound {self.path_bound}")


def default_tolerance(inst: TransportInstance) -> float:
    return 1e-9 * max(1.0, inst.total_demand)


def validate_instance(inst: TransportInstance) -> TransportInstance:
    d, s, c = inst.demands, inst.supplies, inst.costs
    if d.ndim != 1 or s.ndim != 1:
        raise DimensionMismatch("demands and supplies must be one-dimensional")
    if d.size < 1 or s.size < 1:
        raise DimensionMismatch("need at least one demand node and one supply node")
    if c.shape != (d.size, s.size):
        raise DimensionMismatch(
            f"costs has shape {c.shape}, expected ({d.size}, {s.size})")
    for name, arr in (("demands", d), ("supplies", s), ("costs", c)):
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name} contains non-finite values")
        if np.any(arr < 0):
            idx = np.argwhere(arr < 0)[0].tolist()
            raise NegativeValue(f"{name}{idx} is negative")
    total_d = float(d.sum())
    total_s = float(s.sum())
    if total_s > total_d + 1e-12 * total_d:
        raise SupplyExceedsDemand(
            f"total supply {total_s!r} exceeds total demand {total_d!r}")
    return inst


def _check_plan_shape(inst: TransportInstance, plan: TransportPlan) -> None:
    if plan.flow.shape != inst.costs.shape:
        raise DimensionMismatch(
            f"plan has shape {plan.flow.shape}, instance needs {inst.costs.shape}")


def plan_cost(inst: TransportInstance, plan: TransportPlan) -> float:
    _check_plan_shape(inst, plan)
    return float(np.sum(plan.flow * inst.costs))


def classify_plan(inst: TransportInstance, plan: TransportPlan,
                  tol: float | None = None) -> PlanKind:
    _check_plan_shape(inst, plan)
    if tol is None:
        tol = default_tolerance(inst)
    flow = plan.flow
    if np.any(flow < -tol):
        return PlanKind.INFEASIBLE
    row = flow.sum(axis=1)
    col = flow.sum(axis=0)
    if np.any(row > inst.demands + tol) or np.any(col > inst.supplies + tol):
        return PlanKind.INFEASIBLE
    if np.all(np.abs(col - inst.supplies) <= tol):
        return PlanKind.MAXIMUM
    return PlanKind.FEASIBLE


# -- file formats -----------------------------------------------------------

def instance_from_dict(data: Any) -> TransportInstance:
    if not isinstance(data, dict):
        raise ValidationError("instance must be a JSON object")
    fields = {}
    for key in ("demands", "supplies", "costs"):
        if key not in data:
            raise ValidationError(f"missing field '{key}'")
        try:
            fields[key] = np.asarray(data[key], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"field '{key}' is not numeric: {exc}") from None
    if fields["costs"].ndim != 2:
        raise DimensionMismatch("field 'costs' must be a list of equal-length rows")
    return validate_instance(TransportInstance(**fields))


def instance_to_dict(inst: TransportInstance) -> dict[str, Any]:
    return {
        "demands": inst.demands.tolist(),
        "supplies": inst.supplies.tolist(),
        "costs": inst.costs.tolist(),
    }


def load_instance(path: str | Path) -> TransportInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(data)


def save_instance(inst: TransportInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)))


def plan_to_dict(inst: TransportInstance, plan: TransportPlan) -> dict[str, Any]:
    return {"flow": plan.flow.tolist(), "cost": plan_cost(inst, plan)}
