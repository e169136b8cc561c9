"""Full-scan invariant checks for the solver state.

Everything here recomputes from the raw plan and duals; nothing reuses the
solver's adjacency lists or pointers.  Each check raises
``InvariantViolation`` on failure.
"""

from __future__ import annotations

import numpy as np

from .core import InvariantViolation


def _fail(msg: str):
    raise InvariantViolation(msg)


def check_one_feasible(state) -> None:
    s = state.y_a[:, None] + state.y_b[None, :]
    bad_f = (state.flow < state.cap) & (s > state.cbar + 1)
    if bad_f.any():
        a, b = np.argwhere(bad_f)[0]
        _fail(f"1-feasibility: y(a)+y(b) > cbar+1 on unsaturated edge ({a},{b})")
    bad_b = (state.flow > 0) & (s < state.cbar)
    if bad_b.any():
        a, b = np.argwhere(bad_b)[0]
        _fail(f"1-feasibility: y(a)+y(b) < cbar on carrying edge ({a},{b})")


def check_condition_c(state) -> None:
    if np.any(state.y_a > 0):
        _fail(f"demand dual positive: max y(a) = {state.y_a.max()}")
    free = state.dem > 0
    if np.any(state.y_a[free] != 0):
        _fail("free demand node has nonzero dual")


def check_free_supply_duals(state, bound: int) -> None:
    free = state.sup > 0
    if free.any() and state.y_b[free].max() > bound:
        _fail(f"free supply dual {state.y_b[free].max()} exceeds {bound}")


def check_flow_bounds(state) -> None:
    if np.any(state.flow < 0) or np.any(state.flow > state.cap):
        _fail("edge flow outside [0, min(d, s)]")
    d = state.dem + state.flow.sum(axis=1)
    s = state.sup + state.flow.sum(axis=0)
    if np.any(state.dem < 0) or np.any(state.sup < 0):
        _fail("negative residual demand or supply")
    if np.any(state.cap > np.minimum(d[:, None], s[None, :])):
        _fail("residual bookkeeping out of sync with flow")


def admissible_path_exists(state) -> bool:
    """Breadth-first search over zero-slack residual edges."""
    s = state.y_a[:, None] + state.y_b[None, :]
    fwd = (state.flow < state.cap) & (state.cbar + 1 - s == 0)
    bwd = (state.flow > 0) & (s - state.cbar == 0)
    seen_b = state.sup > 0
    seen_a = np.zeros(state.dem.shape, dtype=bool)
    frontier_b = seen_b.copy()
    while frontier_b.any():
        new_a = fwd[:, frontier_b].any(axis=1) & ~seen_a
        seen_a |= new_a
        if np.any(new_a & (state.dem > 0)):
            return True
        new_b = bwd[new_a].any(axis=0) & ~seen_b
        seen_b |= new_b
        frontier_b = new_b
    return False


def check_path_admissible(state, path) -> None:
    for i in range(len(path) - 1):
        if i % 2 == 0:
            b, a = path[i], path[i + 1]
            ok = state.flow[a, b] < state.cap[a, b] and \
                state.cbar[a, b] + 1 - state.y_a[a] - state.y_b[b] == 0
        else:
            a, b = path[i], path[i + 1]
            ok = state.flow[a, b] > 0 and \
                state.y_a[a] + state.y_b[b] - state.cbar[a, b] == 0
        if not ok:
            _fail(f"edge {i} of augmenting path {path} is not admissible")
    if state.sup[path[0]] <= 0 or state.dem[path[-1]] <= 0:
        _fail(f"augmenting path {path} does not join free endpoints")


def check_search_step(state, ell_t: int, y_b_before, free_before, bound: int) -> None:
    """After a Hungarian search: sink distance, dual growth, feasibility."""
    if ell_t < 1:
        _fail(f"sink distance {ell_t} < 1: previous phase left an admissible path")
    gain = state.y_b[free_before] - y_b_before[free_before]
    if gain.size and gain.min() < 1:
        _fail("a free supply node gained less than 1 dual this phase")
    check_one_feasible(state)
    check_condition_c(state)
    check_free_supply_duals(state, bound)
    if not admissible_path_exists(state):
        _fail("Hungarian search produced no admissible augmenting path")


def check_phase_end(state, bound: int) -> None:
    check_flow_bounds(state)
    check_one_feasible(state)
    check_condition_c(state)
    check_free_supply_duals(state, bound)
    if admissible_path_exists(state):
        _fail("admissible augmenting path survives the partial DFS")
