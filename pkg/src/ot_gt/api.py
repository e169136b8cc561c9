from __future__ import annotations

import time
from dataclasses import dataclass

from .core import (
    RunStats,
    SolveConfig,
    TransportInstance,
    TransportPlan,
    plan_cost,
    validate_instance,
)
from .gt_solver import solve_scaled
from .scaling import (
    IntegerPlan,
    ScaledInstance,
    greedy_plan,
    phase_bound,
    recover_plan,
    scale_instance,
)


@dataclass
class SolveResult:
    plan: TransportPlan
    cost: float
    stats: RunStats
    scaled: ScaledInstance | None = None
    int_plan: IntegerPlan | None = None
    duals: tuple | None = None


def solve(inst: TransportInstance, delta: float | SolveConfig, epsilon: float = 0.5,
          debug_assertions: bool = False) -> SolveResult:
    """Compute a plan whose cost is within ``U * delta`` of the optimum.

    ``delta`` may also be a ready-made ``SolveConfig``.
    """
    cfg = delta if isinstance(delta, SolveConfig) else SolveConfig(
        delta=delta, epsilon=epsilon, debug_assertions=debug_assertions)
    validate_instance(inst)
    t0 = time.perf_counter()
    if inst.total_supply <= 0 or inst.max_cost <= 0:
        plan = greedy_plan(inst)
        bound = phase_bound(inst.max_cost, cfg.delta_prime)
        stats = RunStats(phase_bound=bound)
        stats.t_total_ms = 1e3 * (time.perf_counter() - t0)
        return SolveResult(plan, plan_cost(inst, plan), stats)
    scaled = scale_instance(inst, cfg)
    int_plan, duals, stats = solve_scaled(scaled, inst.costs, cfg)
    plan = recover_plan(inst, scaled, int_plan)
    stats.t_total_ms = 1e3 * (time.perf_counter() - t0)
    return SolveResult(plan, plan_cost(inst, plan), stats, scaled, int_plan, duals)
