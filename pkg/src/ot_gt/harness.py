"""Instance construction and the benchmark sweep.

Rows of a sweep follow ``CSV_COLUMNS``.  Sinkhorn rows report their
iteration count (one row update plus one column update) in the ``phases``
column and leave the path statistics blank.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .api import solve
from .core import (
    InternalError,
    PlanKind,
    SolveConfig,
    TransportError,
    TransportInstance,
    ValidationError,
    DimensionMismatch,
    classify_plan,
    instance_to_dict,
    plan_cost,
    validate_instance,
)
from .oracle import optimal_cost
from .scaling import phase_bound
from .sinkhorn import SinkhornParams, round_to_feasible, sinkhorn_scale

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "instance_id", "n_a", "n_b", "delta", "epsilon", "solver", "cost",
    "oracle_cost", "delta_bound_ok", "phases", "phase_bound", "sum_path_edges",
    "sum_half_ceil", "path_bound", "t_search_ms", "t_dfs_ms", "t_augment_ms",
    "t_total_ms",
]
TIMING_COLUMNS = ("t_search_ms", "t_dfs_ms", "t_augment_ms", "t_total_ms")
ORACLE_MAX_N = 200
SOLVERS = ("gt", "sinkhorn")


class EmptyImage(ValidationError):
    pass


# -- images -----------------------------------------------------------------

def _read_pgm(raw: bytes) -> np.ndarray:
    magic = raw[:2]
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(raw) and not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    width, height, maxval = (int(t) for t in tokens)
    if magic == b"P2":
        vals = raw[pos:].split()
        return np.array(vals[: width * height], dtype=np.float64).reshape(height, width)
    pos += 1  # single whitespace before the raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    data = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
    return data.astype(np.float64).reshape(height, width)


def read_image(path: str | Path) -> np.ndarray:
    """Read a PGM (P2/P5) file or a whitespace-separated text grid."""
    raw = Path(path).read_bytes()
    if raw[:2] in (b"P2", b"P5"):
        return _read_pgm(raw)
    rows = [line.split() for line in raw.decode().splitlines() if line.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: text image rows must have equal length")
    return np.array(rows, dtype=np.float64)


def write_pgm(img: np.ndarray, path: str | Path) -> None:
    img = np.asarray(img)
    h, w = img.shape
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + data.tobytes())


def image_pair_to_instance(img1, img2, prune: bool = False) -> TransportInstance:
    """Demands from ``img1``, supplies from ``img2``, both normalised to 1.

    Costs are squared Euclidean distances between pixel coordinates, divided
    by their maximum so that C = 1.  With ``prune`` zero-intensity pixels are
    dropped from their side.
    """
    a = np.asarray(img1, dtype=np.float64)
    b = np.asarray(img2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatch(f"image shapes {a.shape} and {b.shape} differ")
    if np.any(a < 0) or np.any(b < 0):
        raise ValidationError("pixel intensities must be non-negative")
    if a.sum() <= 0 or b.sum() <= 0:
        raise EmptyImage("image has no mass")
    coords = np.argwhere(np.ones(a.shape, dtype=bool)).astype(np.float64)
    keep_a = a.ravel() > 0 if prune else np.ones(a.size, dtype=bool)
    keep_b = b.ravel() > 0 if prune else np.ones(b.size, dtype=bool)
    pa, pb = coords[keep_a], coords[keep_b]
    cost = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
    if cost.max() > 0:
        cost /= cost.max()
    d = a.ravel()[keep_a]
    s = b.ravel()[keep_b]
    return validate_instance(TransportInstance(d / d.sum(), s / s.sum(), cost))


def synthetic_image(side: int, seed: int) -> np.ndarray:
    """A handwriting-like 8-bit image: a few thick strokes on a dark field."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:side, :side].astype(np.float64)
    img = np.zeros((side, side))
    for _ in range(rng.integers(2, 4)):
        p0 = rng.uniform(0.15 * side, 0.85 * side, 2)
        p1 = rng.uniform(0.15 * side, 0.85 * side, 2)
        seg = p1 - p0
        t = ((yy - p0[0]) * seg[0] + (xx - p0[1]) * seg[1]) / max(seg @ seg, 1e-9)
        t = np.clip(t, 0.0, 1.0)
        dist2 = (yy - p0[0] - t * seg[0]) ** 2 + (xx - p0[1] - t * seg[1]) ** 2
        img = np.maximum(img, np.exp(-dist2 / (2 * (0.06 * side) ** 2)))
    img = np.rint(255 * img)
    img[img < 20] = 0
    return img


# -- synthetic instances ------------------------------------------------------

MASS_PROFILES = ("random", "uniform", "sparse", "unbalanced", "identical")
COST_PROFILES = ("random", "zero", "constant", "duplicate", "geometric")
_MASS_BITS = 16
_COST_BITS = 8


def _dyadic_masses(rng, n: int, total_units: int, profile: str) -> np.ndarray:
    if profile == "uniform":
        w = np.ones(n)
    elif profile == "sparse":
        w = rng.random(n) * (rng.random(n) < 0.5)
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
    else:
        w = rng.random(n) + 1e-3
    counts = rng.multinomial(total_units, w / w.sum())
    return counts / float(2**_MASS_BITS)


def synthetic_instance(n_a: int, n_b: int, seed: int, mass_profile: str = "random",
                       cost_profile: str = "random") -> TransportInstance:
    """Deterministic instance with dyadic masses (U <= 1) and costs in [0, 1].

    Dyadic values keep the exact oracle's arithmetic exact in binary floating
    point.  Demands always total 1; supplies total 1 except under the
    ``unbalanced`` profile.
    """
    if mass_profile not in MASS_PROFILES:
        raise ValueError(f"unknown mass profile {mass_profile!r}")
    if cost_profile not in COST_PROFILES:
        raise ValueError(f"unknown cost profile {cost_profile!r}")
    rng = np.random.default_rng(seed)
    full = 2**_MASS_BITS
    d = _dyadic_masses(rng, n_a, full, mass_profile)
    if mass_profile == "identical" and n_a == n_b:
        s = d.copy()
    else:
        supply_units = full if mass_profile != "unbalanced" else int(full * rng.uniform(0.5, 0.95))
        s = _dyadic_masses(rng, n_b, supply_units, mass_profile)
    scale = 2**_COST_BITS
    if cost_profile == "zero":
        c = np.zeros((n_a, n_b))
    elif cost_profile == "constant":
        c = np.full((n_a, n_b), rng.integers(1, scale + 1) / scale)
    elif cost_profile == "duplicate":
        levels = rng.integers(0, scale + 1, size=3) / scale
        c = levels[rng.integers(0, 3, size=(n_a, n_b))]
    elif cost_profile == "geometric":
        pa = rng.integers(0, 16, size=(n_a, 2))
        pb = rng.integers(0, 16, size=(n_b, 2))
        sq = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
        c = np.rint(scale * sq / max(sq.max(), 1)) / scale
    else:
        c = rng.integers(0, scale + 1, size=(n_a, n_b)) / scale
    return validate_instance(TransportInstance(d, s, c))


# -- sweeps --------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    instances: list  # (instance_id, TransportInstance) pairs
    deltas: list
    epsilon: float = 0.5
    solvers: tuple = ("gt",)
    repetitions: int = 1
    seed: int = 0
    output: str | None = None
    sinkhorn_delta_factor: float = 1.0
    sinkhorn_max_iters: int = 100_000
    oracle_max_n: int = ORACLE_MAX_N
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if not self.deltas:
            raise ValidationError("need at least one delta")
        for name in self.solvers:
            if name not in SOLVERS:
                raise ValidationError(f"unknown solver {name!r}; pick from {SOLVERS}")
        for iid, inst in self.instances:
            for delta in self.deltas:
                if not 0 < delta:
                    raise ValidationError(f"delta {delta} must be positive")
                if inst.max_cost > 0 and delta > inst.max_cost:
                    raise ValidationError(
                        f"delta {delta} exceeds max cost {inst.max_cost} on {iid}")


def _blank_row(iid, inst, delta, epsilon, solver) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(instance_id=iid, n_a=inst.n_a, n_b=inst.n_b, delta=delta,
               epsilon=epsilon, solver=solver)
    return row


def _bound_ok(cost, oracle, inst, delta):
    if oracle is None or cost == "":
        return ""
    return bool(cost <= oracle + inst.total_supply * delta + 1e-9)


def _run_one(task) -> dict:
    iid, inst, delta, spec_eps, solver, oracle, sk_factor, sk_iters = task
    row = _blank_row(iid, inst, delta, spec_eps, solver)
    row["oracle_cost"] = "" if oracle is None else oracle
    try:
        if solver == "gt":
            res = solve(inst, SolveConfig(delta=delta, epsilon=spec_eps))
            st = res.stats
            row.update(cost=res.cost, phases=st.phases, phase_bound=st.phase_bound,
                       sum_path_edges=st.sum_path_edges, sum_half_ceil=st.sum_half_ceil,
                       path_bound=st.path_bound, t_search_ms=st.t_search_ms,
                       t_dfs_ms=st.t_dfs_ms, t_augment_ms=st.t_augment_ms,
                       t_total_ms=st.t_total_ms)
        else:
            t0 = time.perf_counter()
            params = SinkhornParams.for_delta(inst, sk_factor * delta, max_iters=sk_iters)
            out = sinkhorn_scale(inst, params)
            plan = round_to_feasible(out.plan, inst.demands, inst.supplies)
            t1 = time.perf_counter()
            if not out.converged:
                log.warning("sinkhorn did not converge on %s (delta=%s)", iid, delta)
            row.update(cost=plan_cost(inst, plan), phases=out.iters,
                       t_total_ms=1e3 * (t1 - t0))
    except TransportError as exc:
        log.error("%s solver failed on %s (delta=%s): %s", solver, iid, delta, exc)
    row["delta_bound_ok"] = _bound_ok(row["cost"], oracle, inst, delta)
    return row


def _worker_count(spec: ExperimentSpec) -> int:
    if spec.workers is not None:
        return max(1, spec.workers)
    try:
        return max(1, int(os.environ.get("OT_GT_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    tasks = []
    for iid, inst in spec.instances:
        oracle = None
        if inst.n <= spec.oracle_max_n:
            oracle = optimal_cost(inst)
        for delta in spec.deltas:
            for solver in spec.solvers:
                for _ in range(spec.repetitions):
                    tasks.append((iid, inst, delta, spec.epsilon, solver, oracle,
                                  spec.sinkhorn_delta_factor, spec.sinkhorn_max_iters))
    workers = _worker_count(spec)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]
    if spec.output:
        write_csv(rows, spec.output)
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: Iterable[dict], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))


# -- property suite --------------------------------------------------------------

@dataclass
class CheckFailure:
    seed: int
    delta: float
    reason: str
    instance: dict


@dataclass
class CheckReport:
    runs: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


CHECK_DELTAS = (0.5, 0.1, 0.05, 0.01)


def check_instance(inst: TransportInstance, delta: float, epsilon: float = 0.5,
                   oracle: float | None = None) -> str | None:
    """Solve with every invariant check on; return a failure reason or None."""
    try:
        res = solve(inst, SolveConfig(delta=delta, epsilon=epsilon, debug_assertions=True))
    except InternalError as exc:
        return f"{type(exc).__name__}: {exc}"
    st = res.stats
    bound = phase_bound(inst.max_cost, (1 - epsilon) * delta) if inst.max_cost > 0 else 1
    if st.phases > bound:
        return f"phases {st.phases} > bound {bound}"
    if st.sum_half_ceil > st.path_bound and inst.max_cost > 0:
        return f"sum ceil(|P|/2) {st.sum_half_ceil} > bound {st.path_bound}"
    if classify_plan(inst, res.plan, 1e-9 * max(1.0, inst.total_supply)) is not PlanKind.MAXIMUM:
        return "recovered plan is not a maximum plan"
    if oracle is None:
        oracle = optimal_cost(inst)
    if res.cost > oracle + inst.total_supply * delta + 1e-9:
        return f"cost {res.cost!r} > optimum {oracle!r} + U*delta"
    return None


def run_property_suite(seeds: int = 20, size_cap: int = 12, base_seed: int = 0,
                       deltas=CHECK_DELTAS, stop_on_failure: bool = True) -> CheckReport:
    """Randomised end-to-end check of the solver against the exact oracle."""
    report = CheckReport()
    for k in range(seeds):
        seed = base_seed + k
        rng = np.random.default_rng(seed)
        n_a, n_b = (int(x) for x in rng.integers(1, size_cap + 1, size=2))
        mass = MASS_PROFILES[k % len(MASS_PROFILES)]
        cost = COST_PROFILES[(k // len(MASS_PROFILES)) % len(COST_PROFILES)]
        inst = synthetic_instance(n_a, n_b, seed, mass, cost)
        oracle = optimal_cost(inst)
        for delta in deltas:
            report.runs += 1
            reason = check_instance(inst, delta, oracle=oracle)
            if reason is not None:
                report.failures.append(
                    CheckFailure(seed, delta, reason, instance_to_dict(inst)))
                if stop_on_failure:
                    return report
    return report
