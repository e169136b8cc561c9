import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ot_gt.core import (
    DimensionMismatch,
    NegativeValue,
    PlanKind,
    SolveConfig,
    SupplyExceedsDemand,
    TransportInstance,
    TransportPlan,
    ValidationError,
    classify_plan,
    instance_from_dict,
    load_instance,
    plan_cost,
    save_instance,
    validate_instance,
)


def test_minimal_instance_is_valid():
    inst = TransportInstance([1], [1], [[0]])
    assert validate_instance(inst) is inst


def test_supply_exceeding_demand_rejected():
    with pytest.raises(SupplyExceedsDemand):
        validate_instance(TransportInstance([0.5], [1], [[0]]))


def test_derived_fields():
    inst = validate_instance(TransportInstance([1, 1], [0.5, 0.5], [[0, 1], [1, 0]]))
    assert inst.n == 4
    assert inst.max_cost == 1
    assert inst.total_supply == 1


@pytest.mark.parametrize("d, s, c, err", [
    ([1, -1], [0.5], [[0], [0]], NegativeValue),
    ([1], [0.5], [[-0.1]], NegativeValue),
    ([1], [0.5], [[0, 1]], DimensionMismatch),
    ([], [0.5], np.zeros((0, 1)), DimensionMismatch),
    ([1], [float("nan")], [[0]], ValidationError),
])
def test_invalid_instances(d, s, c, err):
    with pytest.raises(err):
        validate_instance(TransportInstance(d, s, c))


def test_tiny_supply_excess_within_tolerance():
    validate_instance(TransportInstance([0.1, 0.2], [0.3], [[0], [0]]))


def test_instance_is_read_only():
    inst = TransportInstance([1], [1], [[0]])
    with pytest.raises(ValueError):
        inst.costs[0, 0] = 3


def test_plan_cost_examples():
    assert plan_cost(TransportInstance([1], [1], [[0]]), TransportPlan([[1]])) == 0
    inst = TransportInstance([0.5, 0.5], [0.5, 0.5], [[0, 1], [1, 0]])
    assert plan_cost(inst, TransportPlan([[0.25, 0.25], [0.25, 0.25]])) == 0.5


def test_plan_cost_matches_double_loop():
    rng = np.random.default_rng(3)
    c = rng.random((3, 3))
    sigma = rng.random((3, 3))
    inst = TransportInstance(np.full(3, 10.0), np.ones(3), c)
    expected = 0.0
    for a in range(3):
        for b in range(3):
            expected += sigma[a, b] * c[a, b]
    assert plan_cost(inst, TransportPlan(sigma)) == pytest.approx(expected, rel=1e-14)


def test_plan_cost_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        plan_cost(TransportInstance([1], [1], [[0]]), TransportPlan([[1, 0]]))


@pytest.mark.parametrize("flow, kind", [
    ([[1]], PlanKind.MAXIMUM),
    ([[0.5]], PlanKind.FEASIBLE),
    ([[2]], PlanKind.INFEASIBLE),
    ([[-0.5]], PlanKind.INFEASIBLE),
])
def test_classify_plan(flow, kind):
    inst = TransportInstance([1], [1], [[0]])
    assert classify_plan(inst, TransportPlan(flow), tol=0.0) is kind


def test_solve_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        SolveConfig(delta=0.1, epsilon=1.0)
    with pytest.raises(ValidationError):
        SolveConfig(delta=0.0)
    assert SolveConfig(delta=0.1).delta_prime == pytest.approx(0.05)


masses = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=5)


@st.composite
def instances_and_plans(draw):
    n_a = draw(st.integers(1, 4))
    n_b = draw(st.integers(1, 4))
    cell = st.floats(0, 5, allow_nan=False)
    c = np.array(draw(st.lists(cell, min_size=n_a * n_b, max_size=n_a * n_b))).reshape(n_a, n_b)
    p1 = np.array(draw(st.lists(cell, min_size=n_a * n_b, max_size=n_a * n_b))).reshape(n_a, n_b)
    p2 = np.array(draw(st.lists(cell, min_size=n_a * n_b, max_size=n_a * n_b))).reshape(n_a, n_b)
    lam = draw(st.floats(0, 1))
    return TransportInstance(np.full(n_a, 100.0), np.ones(n_b), c), p1, p2, lam


@settings(max_examples=200, deadline=None)
@given(instances_and_plans())
def test_plan_cost_is_linear(args):
    inst, p1, p2, lam = args
    mixed = plan_cost(inst, TransportPlan(lam * p1 + (1 - lam) * p2))
    split = lam * plan_cost(inst, TransportPlan(p1)) + (1 - lam) * plan_cost(inst, TransportPlan(p2))
    assert mixed == pytest.approx(split, rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(masses, masses, st.floats(0, 1e-6), st.floats(0, 1e-6))
def test_maximum_implies_feasible(d, s, jitter, tol):
    d = np.array(d) + sum(s)
    inst = TransportInstance(d, s, np.zeros((len(d), len(s))))
    flow = np.zeros((len(d), len(s)))
    flow[0] = np.array(s) + jitter
    plan = TransportPlan(flow)
    if classify_plan(inst, plan, tol) is PlanKind.MAXIMUM:
        assert np.all(flow.sum(axis=1) <= d + tol)
        assert np.all(flow.sum(axis=0) <= np.array(s) + tol)


@settings(max_examples=100, deadline=None)
@given(masses, st.floats(0.1, 1))
def test_validate_is_idempotent(d, frac):
    s = [x * frac for x in d]
    inst = TransportInstance(d, s, np.ones((len(d), len(s))))
    once = validate_instance(inst)
    assert validate_instance(once) is once


def test_json_roundtrip(tmp_path):
    inst = TransportInstance([0.5, 0.5], [0.25, 0.75], [[0, 1], [1, 0]])
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    np.testing.assert_array_equal(back.costs, inst.costs)
    np.testing.assert_array_equal(back.supplies, inst.supplies)


def test_missing_field_is_named():
    with pytest.raises(ValidationError, match="supplies"):
        instance_from_dict(json.loads('{"demands": [1], "costs": [[0]]}'))


def test_ragged_costs_rejected():
    with pytest.raises(ValidationError):
        instance_from_dict({"demands": [1, 1], "supplies": [1], "costs": [[0], [1, 2]]})
