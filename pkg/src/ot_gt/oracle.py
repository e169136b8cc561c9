"""Exact reference solvers, used by the tests and by the experiment harness.

``exact_transport`` is successive shortest paths with vertex potentials on an
explicit source/sink network.  ``brute_force_enumerate`` checks it on tiny
integer instances by listing every maximum plan.
"""

from __future__ import annotations

import numpy as np

from .core import TransportError, TransportInstance
from .scaling import IntegerPlan

MAX_CELLS = 250_000
MAX_PLANS = 10**6


class TooLarge(TransportError):
    pass


def exact_transport(demands, supplies, costs, tol: float | None = None):
    """Minimum-cost maximum plan by successive shortest paths.

    Works for integer or real masses. Returns ``(flow, cost)``; ``flow`` is
    indexed ``[a, b]`` like the cost matrix.  Residual capacities at or below
    ``tol`` count as exhausted.
    """
    d = np.asarray(demands, dtype=np.float64)
    s = np.asarray(supplies, dtype=np.float64)
    c = np.asarray(costs, dtype=np.float64)
    n_a, n_b = c.shape
    if n_a * n_b > MAX_CELLS:
        raise TooLarge(f"{n_a}x{n_b} exceeds the oracle's {MAX_CELLS} cells")
    # vertices: 0 = source, 1..n_b supplies, n_b+1..n_b+n_a demands, last = sink
    S, T = 0, n_b + n_a + 1
    V = T + 1
    cap = np.zeros((V, V))
    cost = np.zeros((V, V))
    bs = np.arange(1, n_b + 1)
    as_ = np.arange(n_b + 1, n_b + n_a + 1)
    cap[S, bs] = s
    cap[as_, T] = d
    cap[np.ix_(bs, as_)] = np.inf
    cost[np.ix_(bs, as_)] = c.T
    cost[np.ix_(as_, bs)] = -c
    flow = np.zeros((V, V))
    pot = np.zeros(V)
    remaining = s.sum()
    if tol is None:
        tol = 1e-12 * max(1.0, remaining)
    while remaining > tol:
        resid = cap - flow + flow.T
        has = resid > tol
        dist = np.full(V, np.inf)
        prev = np.full(V, -1)
        done = np.zeros(V, dtype=bool)
        dist[S] = 0.0
        for _ in range(V):
            key = np.where(done, np.inf, dist)
            u = int(key.argmin())
            if not np.isfinite(key[u]):
                break
            done[u] = True
            red = cost[u] + pot[u] - pot
            # potentials keep reduced costs >= 0 up to rounding
            cand = np.where(has[u] & ~done, dist[u] + np.maximum(red, 0.0), np.inf)
            better = cand < dist
            dist[better] = cand[better]
            prev[better] = u
        if not np.isfinite(dist[T]):
            break
        pot = pot + np.where(np.isfinite(dist), dist, dist[T])
        path = [T]
        while path[-1] != S:
            path.append(int(prev[path[-1]]))
        path.reverse()
        push = min(resid[u, v] for u, v in zip(path, path[1:]))
        push = min(push, remaining)
        for u, v in zip(path, path[1:]):
            back = min(flow[v, u], push)
            flow[v, u] -= back
            flow[u, v] += push - back
        remaining -= push
    plan = flow[np.ix_(bs, as_)].T.copy()
    return plan, float(np.sum(plan * c))


def exact_transport_integer(int_demands, int_supplies, costs):
    d = np.asarray(int_demands)
    s = np.asarray(int_supplies)
    if not (np.issubdtype(d.dtype, np.integer) and np.issubdtype(s.dtype, np.integer)):
        raise TypeError("exact_transport_integer needs integer masses")
    if s.sum() > d.sum():
        raise ValueError("total supply exceeds total demand")
    if s.sum() > 10**9:
        raise TooLarge("total supply too large for float-exact arithmetic")
    flow, _ = exact_transport(d, s, costs, tol=0.5)
    flow = np.rint(flow).astype(np.int64)
    c = np.asarray(costs)
    if np.issubdtype(c.dtype, np.integer):
        total = int(sum(int(x) * int(y) for x, y in zip(flow.ravel(), c.ravel())))
    else:
        total = float(np.sum(flow * c))
    return IntegerPlan(flow), total


def optimal_cost(inst: TransportInstance) -> float:
    """w(sigma*) for a real-valued instance."""
    _, cost = exact_transport(inst.demands, inst.supplies, inst.costs)
    return cost


def brute_force_enumerate(int_demands, int_supplies, costs, max_plans: int = MAX_PLANS):
    """Minimum cost over every maximum integer plan, by exhaustive search."""
    d = [int(x) for x in int_demands]
    s = [int(x) for x in int_supplies]
    c = np.asarray(costs).tolist()
    n_a = len(d)
    best = None
    count = 0

    def split(total, room, a):
        # every way to send `total` units into demand slots a.. within `room`
        if a == n_a - 1:
            if total <= room[a]:
                yield (total,)
            return
        for k in range(min(total, room[a]) + 1):
            for rest in split(total - k, room, a + 1):
                yield (k,) + rest

    def walk(b, room, acc):
        nonlocal best, count
        if b == len(s):
            count += 1
            if count > max_plans:
                raise TooLarge(f"more than {max_plans} plans")
            if best is None or acc < best:
                best = acc
            return
        for parts in split(s[b], room, 0):
            new_room = [r - k for r, k in zip(room, parts)]
            walk(b + 1, new_room, acc + sum(k * c[a][b] for a, k in enumerate(parts)))

    walk(0, d, 0)
    if best is None:
        raise ValueError("no maximum plan exists")
    return best
