import csv
import io

import numpy as np
import pytest

from ot_gt.core import DimensionMismatch, ValidationError, validate_instance
from ot_gt.harness import (
    COST_PROFILES,
    CSV_COLUMNS,
    MASS_PROFILES,
    TIMING_COLUMNS,
    EmptyImage,
    ExperimentSpec,
    check_instance,
    image_pair_to_instance,
    read_image,
    rows_to_csv,
    run_experiment,
    run_property_suite,
    synthetic_image,
    synthetic_instance,
    write_pgm,
)
from ot_gt.oracle import brute_force_enumerate, optimal_cost


def test_two_pixel_images():
    inst = image_pair_to_instance([[1, 0]], [[0, 1]])
    assert inst.demands.tolist() == [1, 0]
    assert inst.supplies.tolist() == [0, 1]
    assert inst.costs.tolist() == [[0, 1], [1, 0]]


def test_full_size_image_has_one_bin_per_pixel():
    img = synthetic_image(28, 0)
    inst = image_pair_to_instance(img, synthetic_image(28, 1))
    assert inst.n_a == inst.n_b == 784
    assert inst.max_cost == 1.0
    assert inst.total_supply == pytest.approx(1.0)


def test_three_pixel_optimum_matches_brute_force():
    inst = image_pair_to_instance([[1, 1, 0]], [[0, 1, 1]])
    raw = [[0, 1, 4], [1, 0, 1], [4, 1, 0]]
    np.testing.assert_array_equal(inst.costs * 4, raw)
    # masses are halved and costs quartered relative to the integer version
    expected = brute_force_enumerate([1, 1, 0], [0, 1, 1], raw) / 8
    assert expected == 0.25
    assert optimal_cost(inst) == pytest.approx(expected, abs=1e-12)


def test_pruning_drops_empty_pixels():
    inst = image_pair_to_instance([[1, 1, 0]], [[0, 1, 1]], prune=True)
    assert (inst.n_a, inst.n_b) == (2, 2)
    assert optimal_cost(inst) == pytest.approx(0.25, abs=1e-12)


def test_image_errors():
    with pytest.raises(EmptyImage):
        image_pair_to_instance([[0, 0]], [[0, 1]])
    with pytest.raises(DimensionMismatch):
        image_pair_to_instance([[1, 0]], [[1], [0]])


def test_pgm_roundtrip(tmp_path):
    img = synthetic_image(14, 3)
    write_pgm(img, tmp_path / "x.pgm")
    np.testing.assert_array_equal(read_image(tmp_path / "x.pgm"), img)


def test_ascii_pgm_and_text_grid(tmp_path):
    (tmp_path / "a.pgm").write_text("P2\n# comment\n3 2\n255\n0 1 2\n3 4 5\n")
    np.testing.assert_array_equal(read_image(tmp_path / "a.pgm"), [[0, 1, 2], [3, 4, 5]])
    (tmp_path / "b.txt").write_text("0 1\n2 3\n")
    np.testing.assert_array_equal(read_image(tmp_path / "b.txt"), [[0, 1], [2, 3]])
    (tmp_path / "c.txt").write_text("0 1\n2\n")
    with pytest.raises(ValidationError):
        read_image(tmp_path / "c.txt")


def test_sixteen_bit_pgm(tmp_path):
    raster = np.array([[0, 300], [65535, 7]], dtype=">u2")
    (tmp_path / "w.pgm").write_bytes(b"P5\n2 2\n65535\n" + raster.tobytes())
    np.testing.assert_array_equal(read_image(tmp_path / "w.pgm"), raster.astype(float))


def test_synthetic_is_deterministic():
    a = synthetic_instance(7, 5, 42)
    b = synthetic_instance(7, 5, 42)
    np.testing.assert_array_equal(a.costs, b.costs)
    np.testing.assert_array_equal(a.supplies, b.supplies)
    assert not np.array_equal(a.costs, synthetic_instance(7, 5, 43).costs)


def test_synthetic_profiles():
    assert synthetic_instance(4, 4, 0, cost_profile="zero").max_cost == 0
    const = synthetic_instance(4, 4, 0, cost_profile="constant").costs
    assert np.all(const == const[0, 0])
    ident = synthetic_instance(5, 5, 0, mass_profile="identical")
    np.testing.assert_array_equal(ident.demands, ident.supplies)
    unb = synthetic_instance(5, 5, 0, mass_profile="unbalanced")
    assert unb.total_supply < unb.total_demand == 1.0
    with pytest.raises(ValueError):
        synthetic_instance(2, 2, 0, mass_profile="nope")


def test_thousand_synthetic_instances_validate():
    rng = np.random.default_rng(0)
    for k in range(1000):
        n_a, n_b = (int(x) for x in rng.integers(1, 16, 2))
        inst = synthetic_instance(n_a, n_b, k, MASS_PROFILES[k % 5], COST_PROFILES[k // 5 % 5])
        validate_instance(inst)
        # dyadic values survive the round trip through binary floats
        assert np.all(inst.supplies * 2**16 == np.rint(inst.supplies * 2**16))
        assert np.all(inst.costs * 2**8 == np.rint(inst.costs * 2**8))


def _sweep(**kw):
    inst = synthetic_instance(6, 6, 1, cost_profile="geometric")
    assert inst.max_cost == 1.0
    spec = ExperimentSpec(instances=[("syn6", inst)], deltas=[0.5, 0.1],
                          solvers=("gt", "sinkhorn"), **kw)
    return run_experiment(spec)


def test_sweep_rows_and_bounds():
    rows = _sweep()
    assert len(rows) == 4
    assert [(r["delta"], r["solver"]) for r in rows] == [
        (0.5, "gt"), (0.5, "sinkhorn"), (0.1, "gt"), (0.1, "sinkhorn")]
    for r in rows:
        assert r["delta_bound_ok"] is True or r["solver"] == "sinkhorn"
        if r["solver"] == "gt":
            assert r["phases"] <= r["phase_bound"]
            assert r["sum_half_ceil"] <= r["path_bound"]
    assert rows[2]["phase_bound"] == 41


def test_csv_schema(tmp_path):
    out = tmp_path / "r.csv"
    rows = _sweep(output=str(out))
    text = out.read_text()
    assert text == rows_to_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == CSV_COLUMNS
    assert all(len(r) == len(CSV_COLUMNS) for r in parsed)
    assert parsed[1][CSV_COLUMNS.index("delta_bound_ok")] == "true"
    assert set(TIMING_COLUMNS) <= set(CSV_COLUMNS)


def test_parallel_sweep_matches_serial():
    def strip(rows):
        return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]
    assert strip(_sweep(workers=2)) == strip(_sweep(workers=1))


def test_spec_validation():
    inst = synthetic_instance(3, 3, 0)
    with pytest.raises(ValidationError):
        ExperimentSpec(instances=[("x", inst)], deltas=[5.0])
    with pytest.raises(ValidationError):
        ExperimentSpec(instances=[("x", inst)], deltas=[0.1], solvers=("lp",))


def test_check_instance_and_suite():
    assert check_instance(synthetic_instance(5, 4, 9), 0.1) is None
    report = run_property_suite(seeds=10, size_cap=8)
    assert report.ok
    assert report.runs == 40
