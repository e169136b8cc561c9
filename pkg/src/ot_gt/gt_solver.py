"""Single-scale Gabow-Tarjan solver for the integer transportation problem.

The solver keeps an integer plan together with integer dual weights that are
1-feasible with respect to the scaled costs ``floor(2c / delta')``:

* ``y(a) + y(b) <= cbar(a, b) + 1`` on every edge that can still take flow,
* ``y(a) + y(b) >= cbar(a, b)`` on every edge that carries flow,

and it keeps ``y(a) <= 0`` on demand nodes with ``y(a) == 0`` on demand nodes
that still have room.  Each phase runs a Hungarian search (Dijkstra over edge
slacks followed by a dual adjustment) and then a partial DFS that augments
along admissible (zero-slack) paths.  At most ``floor(2C/delta') + 1`` phases
are needed.

Vertices are numbered demand nodes first, then supply nodes; this order breaks
every tie.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import invariants
from .core import InternalError, RunStats, SolveConfig
from .scaling import IntegerPlan, OverflowRisk, ScaledInstance, scaled_cost

__all__ = [
    "AugmentingPath",
    "SolverState",
    "scaled_cost",
    "slack",
    "hungarian_search",
    "partial_dfs_phase",
    "augment",
    "solve_scaled",
]

INF = 2**60

FORWARD = "forward"
BACKWARD = "backward"


class NoSuchResidualEdge(InternalError, KeyError):
    pass


class SinkUnreachable(InternalError):
    pass


class NoPathInPhase(InternalError):
    pass


class CapacityViolation(InternalError):
    pass


class PhaseBoundExceeded(InternalError):
    pass


@dataclass
class SolverState:
    """Mutable primal-dual state of one solve.

    ``cap[a, b] = min(d_a, s_b)`` is the edge capacity of the integer
    instance; ``dem`` and ``sup`` hold remaining demand and supply, so a node
    is free exactly when its entry is positive.
    """

    cbar: np.ndarray
    cap: np.ndarray
    flow: np.ndarray
    y_a: np.ndarray
    y_b: np.ndarray
    dem: np.ndarray
    sup: np.ndarray
    # partial-DFS bookkeeping, rebuilt by every Hungarian search
    adj_a: list = field(default_factory=list)
    adj_b: list = field(default_factory=list)
    ptr_a: list = field(default_factory=list)
    ptr_b: list = field(default_factory=list)
    alive_a: list = field(default_factory=list)
    alive_b: list = field(default_factory=list)

    @classmethod
    def initial(cls, int_demands, int_supplies, cbar) -> "SolverState":
        d = np.asarray(int_demands, dtype=np.int64)
        s = np.asarray(int_supplies, dtype=np.int64)
        cbar = np.asarray(cbar, dtype=np.int64)
        if cbar.shape != (d.size, s.size):
            raise ValueError(f"cost shape {cbar.shape} != ({d.size}, {s.size})")
        return cls(
            cbar=cbar,
            cap=np.minimum(d[:, None], s[None, :]),
            flow=np.zeros(cbar.shape, dtype=np.int64),
            y_a=np.zeros(d.size, dtype=np.int64),
            y_b=np.zeros(s.size, dtype=np.int64),
            dem=d.copy(),
            sup=s.copy(),
        )

    @property
    def free_a(self) -> np.ndarray:
        return self.dem > 0

    @property
    def free_b(self) -> np.ndarray:
        return self.sup > 0

    def forward_exists(self) -> np.ndarray:
        return self.flow < self.cap

    def backward_exists(self) -> np.ndarray:
        return self.flow > 0

    def forward_slacks(self) -> np.ndarray:
        return self.cbar + 1 - self.y_a[:, None] - self.y_b[None, :]

    def backward_slacks(self) -> np.ndarray:
        return self.y_a[:, None] + self.y_b[None, :] - self.cbar


class AugmentingPath(NamedTuple):
    """Alternating path ``b0, a1, b1, ..., ak`` from a free supply node to a
    free demand node, with the amount ``r`` pushed along it."""

    vertices: tuple
    r: int

    @property
    def edges(self) -> int:
        return len(self.vertices) - 1


class SearchResult(NamedTuple):
    dist_a: np.ndarray
    dist_b: np.ndarray
    ell_t: int


def slack(state: SolverState, a: int, b: int, direction: str) -> int:
    if direction == FORWARD:
        if not state.flow[a, b] < state.cap[a, b]:
            raise NoSuchResidualEdge(f"no forward residual edge {b}->{a}")
        return int(state.cbar[a, b] + 1 - state.y_a[a] - state.y_b[b])
    if direction == BACKWARD:
        if not state.flow[a, b] > 0:
            raise NoSuchResidualEdge(f"no backward residual edge {a}->{b}")
        return int(state.y_a[a] + state.y_b[b] - state.cbar[a, b])
    raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")


def shortest_slack_distances(state: SolverState, full: bool = False,
                             stats: RunStats | None = None) -> SearchResult:
    """Dense O(n^2) Dijkstra from the virtual source over edge slacks.

    Unless ``full`` is set, the scan stops at the first free demand node it
    settles; every vertex closer than the sink is settled by then.  Unsettled
    vertices are reported as ``INF``.
    """
    n_a, n_b = state.cbar.shape
    fwd = np.where(state.forward_exists(), state.forward_slacks(), INF).T.copy()
    bwd = np.where(state.backward_exists(), state.backward_slacks(), INF)
    fwd_deg = (fwd < INF).sum(axis=1).tolist()
    bwd_deg = (bwd < INF).sum(axis=1).tolist()
    free_a = state.free_a.tolist()

    dist_a = np.full(n_a, INF, dtype=np.int64)
    dist_b = np.where(state.free_b, 0, INF).astype(np.int64)
    key_a = dist_a.copy()
    key_b = dist_b.copy()
    done_a = np.zeros(n_a, dtype=bool)
    done_b = np.zeros(n_b, dtype=bool)
    ell_t = INF
    visits = 0
    while True:
        ia = int(key_a.argmin())
        ib = int(key_b.argmin())
        ka = int(key_a[ia])
        kb = int(key_b[ib])
        if ka >= INF and kb >= INF:
            break
        if ka <= kb:
            done_a[ia] = True
            key_a[ia] = INF
            if free_a[ia] and ka < ell_t:
                ell_t = ka
                if not full:
                    break
            cand = bwd[ia] + ka
            np.minimum(dist_b, cand, out=dist_b)
            key_b = np.where(done_b, INF, dist_b)
            visits += bwd_deg[ia]
        else:
            done_b[ib] = True
            key_b[ib] = INF
            cand = fwd[ib] + kb
            np.minimum(dist_a, cand, out=dist_a)
            key_a = np.where(done_a, INF, dist_a)
            visits += fwd_deg[ib]
    dist_a = np.where(done_a, dist_a, INF)
    dist_b = np.where(done_b, dist_b, INF)
    if stats is not None:
        stats.dijkstra_edge_visits += visits
    return SearchResult(dist_a, dist_b, ell_t)


def apply_dual_updates(state: SolverState, dist_a: np.ndarray,
                       dist_b: np.ndarray, ell_t: int) -> None:
    """Shift duals of every vertex closer than the sink by its distance gap."""
    ua = dist_a < ell_t
    ub = dist_b < ell_t
    state.y_a[ua] -= ell_t - dist_a[ua]
    state.y_b[ub] += ell_t - dist_b[ub]


def _build_admissible(state: SolverState) -> None:
    n_a, n_b = state.cbar.shape
    adm_f = state.forward_exists() & (state.forward_slacks() == 0)
    adm_b = state.backward_exists() & (state.backward_slacks() == 0)
    # rows of adm_f.T are supply nodes; neighbours come out in ascending order
    bs, as_ = np.nonzero(adm_f.T)
    state.adj_b = [x.tolist() for x in np.split(as_, np.cumsum(np.bincount(bs, minlength=n_b))[:-1])]
    as2, bs2 = np.nonzero(adm_b)
    state.adj_a = [x.tolist() for x in np.split(bs2, np.cumsum(np.bincount(as2, minlength=n_a))[:-1])]
    state.ptr_a = [0] * n_a
    state.ptr_b = [0] * n_b
    state.alive_a = [True] * n_a
    state.alive_b = [True] * n_b


def hungarian_search(state: SolverState, full: bool = False,
                     stats: RunStats | None = None) -> SearchResult:
    """Run Dijkstra, adjust duals and rebuild the admissible graph.

    Afterwards the state is still 1-feasible and holds at least one
    admissible augmenting path.
    """
    if not state.free_b.any():
        raise ValueError("hungarian_search needs a free supply node")
    res = shortest_slack_distances(state, full=full, stats=stats)
    if res.ell_t >= INF:
        raise SinkUnreachable("no residual path from a free supply to a free demand")
    apply_dual_updates(state, res.dist_a, res.dist_b, res.ell_t)
    _build_admissible(state)
    return res


def augment(state: SolverState, path, stats: RunStats | None = None) -> AugmentingPath:
    """Push the bottleneck amount along an alternating vertex sequence.

    ``path`` is ``[b0, a1, b1, ..., ak]``; even positions are supply nodes.
    """
    verts = list(path)
    if len(verts) < 2 or len(verts) % 2:
        raise CapacityViolation(f"malformed augmenting path {verts}")
    flow, cap = state.flow, state.cap
    b0, ak = verts[0], verts[-1]
    r = min(int(state.sup[b0]), int(state.dem[ak]))
    for i in range(len(verts) - 1):
        if i % 2 == 0:
            b, a = verts[i], verts[i + 1]
            r = min(r, int(cap[a, b] - flow[a, b]))
        else:
            a, b = verts[i], verts[i + 1]
            r = min(r, int(flow[a, b]))
    if r <= 0:
        raise CapacityViolation(f"path {verts} has no residual capacity")
    for i in range(len(verts) - 1):
        if i % 2 == 0:
            flow[verts[i + 1], verts[i]] += r
        else:
            flow[verts[i], verts[i + 1]] -= r
    state.sup[b0] -= r
    state.dem[ak] -= r
    if stats is not None:
        stats.augment_edge_updates += len(verts) - 1
    return AugmentingPath(tuple(verts), r)


def _dfs(state: SolverState, root: int, stats: RunStats | None) -> list | None:
    """Search the surviving admissible graph from supply node ``root``.

    Returns the vertex sequence of an augmenting path, or None after deleting
    every vertex the search backed out of.
    """
    flow, cap, dem = state.flow, state.cap, state.dem
    adj_a, adj_b = state.adj_a, state.adj_b
    ptr_a, ptr_b = state.ptr_a, state.ptr_b
    alive_a, alive_b = state.alive_a, state.alive_b
    path = [root]
    visits = 0
    found = None
    while path:
        v = path[-1]
        if len(path) % 2 == 0:
            # v is a demand node
            if dem[v] > 0:
                found = path
                break
            lst = adj_a[v]
            p = ptr_a[v]
            while p < len(lst):
                w = lst[p]
                visits += 1
                if alive_b[w] and flow[v, w] > 0:
                    break
                p += 1
            ptr_a[v] = p
            if p < len(lst):
                path.append(lst[p])
                continue
            alive_a[v] = False
        else:
            lst = adj_b[v]
            p = ptr_b[v]
            while p < len(lst):
                w = lst[p]
                visits += 1
                if alive_a[w] and flow[w, v] < cap[w, v]:
                    break
                p += 1
            ptr_b[v] = p
            if p < len(lst):
                path.append(lst[p])
                continue
            alive_b[v] = False
        path.pop()
        if path:
            u = path[-1]
            if len(path) % 2 == 0:
                ptr_a[u] += 1
            else:
                ptr_b[u] += 1
    if stats is not None:
        stats.dfs_edge_visits += visits
    return found


def partial_dfs_phase(state: SolverState, stats: RunStats | None = None,
                      check_slack: bool = False) -> list[AugmentingPath]:
    """Augment along admissible paths until no free supply node survives."""
    applied = []
    t_aug = 0.0
    for b in np.flatnonzero(state.free_b).tolist():
        while state.sup[b] > 0 and state.alive_b[b]:
            found = _dfs(state, b, stats)
            if found is None:
                break
            if check_slack:
                invariants.check_path_admissible(state, found)
            t0 = time.perf_counter()
            applied.append(augment(state, found, stats))
            t_aug += time.perf_counter() - t0
    if stats is not None:
        stats.t_augment_ms += 1e3 * t_aug
        stats.t_dfs_ms -= 1e3 * t_aug
    return applied


def solve_scaled(scaled: ScaledInstance, costs=None, cfg: SolveConfig | None = None):
    """Compute a 1-optimal integer plan satisfying the demand-dual condition.

    Returns ``(IntegerPlan, (y_a, y_b), RunStats)``.
    """
    if costs is None:
        costs = scaled.costs
    debug = bool(cfg and cfg.debug_assertions)
    t_start = time.perf_counter()
    cbar = scaled_cost(costs, scaled.delta_prime)
    bound = scaled.phase_bound
    stats = RunStats(
        phase_bound=bound,
        path_bound=scaled.total_supply * bound,
        total_supply=scaled.total_supply,
    )
    if stats.path_bound >= 2**62:
        raise OverflowRisk("path bound exceeds 62-bit guard")
    state = SolverState.initial(scaled.int_demands, scaled.int_supplies, cbar)

    while state.free_b.any():
        stats.phases += 1
        if stats.phases > bound:
            raise PhaseBoundExceeded(f"phase {stats.phases} exceeds bound {bound}")
        before = state.y_b.copy()
        free_before = state.free_b.copy()

        t0 = time.perf_counter()
        res = hungarian_search(state, stats=stats)
        t1 = time.perf_counter()
        stats.t_search_ms += 1e3 * (t1 - t0)

        if debug:
            invariants.check_search_step(state, res.ell_t, before, free_before, bound)

        paths = partial_dfs_phase(state, stats, check_slack=debug)
        stats.t_dfs_ms += 1e3 * (time.perf_counter() - t1)
        if not paths:
            raise NoPathInPhase(f"phase {stats.phases} found no augmenting path")
        for p in paths:
            stats.paths += 1
            stats.sum_path_edges += p.edges
            stats.sum_half_ceil += (p.edges + 1) // 2

        if debug:
            invariants.check_phase_end(state, bound)

    if int(state.flow.sum()) != scaled.total_supply:
        raise InternalError("shipped amount differs from total integer supply")
    stats.check_bounds()
    stats.t_total_ms = 1e3 * (time.perf_counter() - t_start)
    return IntegerPlan(state.flow), (state.y_a.copy(), state.y_b.copy()), stats
