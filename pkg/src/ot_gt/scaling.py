"""Integer rescaling of masses and recovery of a real-valued plan.

The solver works on integer demands and supplies.  ``scale_instance`` maps a
real instance onto an integer one with scale factor
``alpha = 2 n C / (eps U delta)`` (demands rounded up, supplies rounded down),
and ``recover_plan`` turns a maximum integer plan back into a maximum plan for
the original masses.  The rounding loss costs at most ``eps * U * delta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    InternalError,
    SolveConfig,
    TransportError,
    TransportInstance,
    TransportPlan,
    ValidationError,
    default_tolerance,
)

INT_GUARD = 2**62
# float products like 0.3 * 10 land a few ulps off the integer they denote
_SNAP_RTOL = 1e-12


class ZeroTotalSupply(TransportError):
    pass


class ZeroMaxCost(TransportError):
    pass


class OverflowRisk(TransportError):
    """delta is too small for 64-bit integer arithmetic on this instance."""


class NotMaximum(ValidationError):
    pass


class InternalAccounting(InternalError):
    pass


def scaled_cost(c, delta_prime: float):
    """Integer cost floor(2c / delta'); works on scalars and arrays."""
    q = np.floor(2.0 * np.asarray(c, dtype=np.float64) / delta_prime)
    if np.any(q >= INT_GUARD):
        raise OverflowRisk(f"scaled cost exceeds 2^62 (delta'={delta_prime})")
    if q.ndim == 0:
        return int(q)
    return q.astype(np.int64)


def phase_bound(max_cost: float, delta_prime: float) -> int:
    return scaled_cost(max_cost, delta_prime) + 1


@dataclass(frozen=True)
class IntegerPlan:
    flow: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.flow, dtype=np.int64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "flow", arr)


@dataclass(frozen=True)
class ScaledInstance:
    alpha: float
    int_demands: np.ndarray
    int_supplies: np.ndarray
    total_supply: int
    delta: float
    epsilon: float
    delta_prime: float
    costs: np.ndarray

    @property
    def max_cost(self) -> float:
        return float(self.costs.max())

    @property
    def phase_bound(self) -> int:
        return phase_bound(self.max_cost, self.delta_prime)

    @property
    def path_bound(self) -> int:
        return self.total_supply * self.phase_bound


def _snap(x: np.ndarray) -> np.ndarray:
    r = np.rint(x)
    return np.where(np.abs(x - r) <= _SNAP_RTOL * np.maximum(1.0, np.abs(x)), r, x)


def compute_alpha(inst: TransportInstance, cfg: SolveConfig) -> float:
    return 2.0 * inst.n * inst.max_cost / (cfg.epsilon * inst.total_supply * cfg.delta)


def scale_instance(inst: TransportInstance, cfg: SolveConfig,
                   alpha: float | None = None) -> ScaledInstance:
    """Build the integer instance.

    ``alpha`` overrides the default scale factor; it exists for tests and
    for experimenting with finer or coarser integerisation.
    """
    if inst.total_supply <= 0:
        raise ZeroTotalSupply("total supply is zero; the empty plan is optimal")
    if inst.max_cost <= 0:
        raise ZeroMaxCost("all costs are zero; every maximum plan is optimal")
    if alpha is None:
        alpha = compute_alpha(inst, cfg)
    d_scaled = _snap(inst.demands * alpha)
    s_scaled = _snap(inst.supplies * alpha)
    if d_scaled.max() >= INT_GUARD or s_scaled.max() >= INT_GUARD:
        raise OverflowRisk(f"alpha={alpha:g} overflows 62-bit integer masses")
    int_d = np.ceil(d_scaled).astype(np.int64)
    int_s = np.floor(s_scaled).astype(np.int64)
    total = int(sum(int(x) for x in int_s))
    bound = phase_bound(inst.max_cost, cfg.delta_prime)
    if total * bound >= INT_GUARD:
        raise OverflowRisk(
            f"total integer supply {total} times phase bound {bound} exceeds 2^62")
    int_d.setflags(write=False)
    int_s.setflags(write=False)
    return ScaledInstance(
        alpha=float(alpha),
        int_demands=int_d,
        int_supplies=int_s,
        total_supply=total,
        delta=cfg.delta,
        epsilon=cfg.epsilon,
        delta_prime=cfg.delta_prime,
        costs=inst.costs,
    )


def push_back_excess(inst: TransportInstance, flow: np.ndarray) -> np.ndarray:
    """Remove over-delivery at demand nodes, most expensive edges first.

    Supply columns get the same treatment; with exact arithmetic they never
    exceed their supply, so this only mops up floating point noise.
    """
    flow = flow.copy()
    c = inst.costs
    for a in np.flatnonzero(flow.sum(axis=1) > inst.demands):
        excess = flow[a].sum() - inst.demands[a]
        for b in np.argsort(-c[a], kind="stable"):
            if excess <= 0:
                break
            cut = min(excess, flow[a, b])
            flow[a, b] -= cut
            excess -= cut
    for b in np.flatnonzero(flow.sum(axis=0) > inst.supplies):
        excess = flow[:, b].sum() - inst.supplies[b]
        for a in np.argsort(-c[:, b], kind="stable"):
            if excess <= 0:
                break
            cut = min(excess, flow[a, b])
            flow[a, b] -= cut
            excess -= cut
    return flow


def fill_leftover(inst: TransportInstance, flow: np.ndarray) -> np.ndarray:
    """Ship remaining supply to remaining demand capacity, cheapest first."""
    flow = flow.copy()
    c = inst.costs
    room = np.maximum(inst.demands - flow.sum(axis=1), 0.0)
    left = np.maximum(inst.supplies - flow.sum(axis=0), 0.0)
    for b in np.flatnonzero(left > 0):
        rest = left[b]
        for a in np.argsort(c[:, b], kind="stable"):
            if rest <= 0:
                break
            if room[a] <= 0:
                continue
            t = min(rest, room[a])
            flow[a, b] += t
            room[a] -= t
            rest -= t
    return flow


def recover_plan(inst: TransportInstance, scaled: ScaledInstance,
                 int_plan: IntegerPlan) -> TransportPlan:
    sigma = int_plan.flow
    if sigma.shape != inst.costs.shape:
        raise NotMaximum(f"integer plan has shape {sigma.shape}")
    if np.any(sigma < 0) or np.any(sigma.sum(axis=0) != scaled.int_supplies):
        raise NotMaximum("integer plan does not saturate every scaled supply")
    if np.any(sigma.sum(axis=1) > scaled.int_demands):
        raise NotMaximum("integer plan exceeds a scaled demand")
    flow = sigma / scaled.alpha
    flow = push_back_excess(inst, flow)
    flow = fill_leftover(inst, flow)
    tol = default_tolerance(inst)
    if np.any(flow.sum(axis=1) > inst.demands + tol):
        raise InternalAccounting("demand excess remains after pushback")
    if np.any(np.abs(flow.sum(axis=0) - inst.supplies) > tol):
        raise InternalAccounting("supply left unshipped after leftover matching")
    return TransportPlan(flow, kind="maximum")


def greedy_plan(inst: TransportInstance) -> TransportPlan:
    """Saturate every supply in index order; used when costs or supply are zero."""
    flow = fill_leftover(inst, np.zeros_like(inst.costs))
    return TransportPlan(flow, kind="maximum")
