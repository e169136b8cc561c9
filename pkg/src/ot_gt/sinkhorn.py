"""Log-domain Sinkhorn baseline and rounding onto the transport polytope."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .core import TransportError, TransportInstance, TransportPlan, ValidationError


class NonBalanced(ValidationError):
    pass


class ZeroMass(TransportError):
    pass


@dataclass(frozen=True)
class SinkhornParams:
    eta: float
    max_iters: int = 100_000
    marginal_tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not self.marginal_tol > 0:
            raise ValidationError(f"marginal_tol must be positive, got {self.marginal_tol}")

    @classmethod
    def for_delta(cls, inst: TransportInstance, delta: float, **kw) -> "SinkhornParams":
        # our defaults, not certified: eta = delta / (4 ln(m+1)), tol = delta / (8C)
        m = max(inst.n_a, inst.n_b)
        c = inst.max_cost if inst.max_cost > 0 else 1.0
        return cls(eta=delta / (4.0 * math.log(m + 1)),
                   marginal_tol=delta / (8.0 * c), **kw)


class SinkhornResult(NamedTuple):
    plan: TransportPlan
    iters: int
    converged: bool
    marginal_error: float


def sinkhorn_scale(inst: TransportInstance, params: SinkhornParams) -> SinkhornResult:
    """Alternate row and column scaling of exp(-c/eta) in log space.

    Initialisation performs one column update, so columns match from the
    start; each counted iteration is a row update followed by a column
    update.  Zero-mass rows and columns are carried as all-zero.
    """
    d, s, c = inst.demands, inst.supplies, inst.costs
    total_d, total_s = d.sum(), s.sum()
    if abs(total_d - total_s) > 1e-9 * max(1.0, total_d):
        raise NonBalanced(f"demand {total_d!r} != supply {total_s!r}")
    with np.errstate(divide="ignore"):
        log_d = np.log(d)
        log_s = np.log(s)
    log_k = -c / params.eta
    f = np.zeros(d.size)

    def col_update(f):
        return log_s - logsumexp(log_k + f[:, None], axis=0)

    def row_update(g):
        return log_d - logsumexp(log_k + g[None, :], axis=1)

    def plan_of(f, g):
        return np.exp(log_k + f[:, None] + g[None, :])

    def error(p):
        return float(np.abs(p.sum(axis=1) - d).sum() + np.abs(p.sum(axis=0) - s).sum())

    g = col_update(f)
    p = plan_of(f, g)
    err = error(p)
    best = (err, p)
    iters = 0
    while err > params.marginal_tol and iters < params.max_iters:
        f = row_update(g)
        g = col_update(f)
        p = plan_of(f, g)
        err = error(p)
        iters += 1
        if err < best[0]:
            best = (err, p)
    converged = err <= params.marginal_tol
    if not converged:
        err, p = best
    return SinkhornResult(TransportPlan(p, kind="raw"), iters, converged, err)


def round_to_feasible(plan: TransportPlan | np.ndarray, d, s) -> TransportPlan:
    """Project a non-negative matrix onto plans with marginals exactly (d, s).

    Rows are scaled down to at most ``d``, then columns to at most ``s``, and
    the missing mass is filled with the rank-one matrix ``er ec^T / |er|_1``.
    """
    p = np.array(plan.flow if isinstance(plan, TransportPlan) else plan, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if np.any(p < 0):
        raise ValidationError("plan has negative entries")
    if d.sum() <= 0 or s.sum() <= 0:
        raise ZeroMass("marginals carry no mass")
    row = p.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(row > d, d / row, 1.0)
    p *= x[:, None]
    col = p.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(col > s, s / col, 1.0)
    p *= y[None, :]
    er = np.maximum(d - p.sum(axis=1), 0.0)
    ec = np.maximum(s - p.sum(axis=0), 0.0)
    mass = er.sum()
    if mass > 0:
        p += np.outer(er, ec) / mass
    return TransportPlan(p, kind="maximum")
