"""Shift-test engine: plans, both corrections, both pairing routes."""

import numpy as np
import pytest

import shiftreg.engine as engine_mod
from conftest import make_dataset
from shiftreg import (
    ShiftPlan, SpatialDataset, UNIT_SQUARE, Window,
    run_shift_test, run_torus_test, run_variance_test,
)
from shiftreg.errors import ShiftExhausted, ValidationError
from shiftreg.fields import substream
from shiftreg.geometry import nearest_pairing, torus_wrap
from shiftreg.statistics import evaluate, rank_p_value


def lattice_dataset(nx=10, ny=10, seed=3):
    """Complete lattice with spacing 1/nx, wrap-compatible with the unit window."""
    rng = np.random.default_rng(seed)
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    locs = np.stack([gx.ravel(), gy.ravel()], axis=1)
    data = SpatialDataset(
        window=UNIT_SQUARE,
        locations=locs,
        covariates={"x1": rng.normal(size=nx * ny)},
        response=rng.normal(size=nx * ny),
    )
    return data, rng.normal(size=nx * ny)


# ---------------------------------------------------------------- ShiftPlan

@pytest.mark.parametrize("kwargs", [
    dict(correction="donut"),
    dict(statistic="spearman"),
    dict(K=18),
    dict(tail="both"),
    dict(shift_mode="jitter"),
    dict(shift_mode="fixed_grid"),          # separation missing
    dict(min_retained=3),
])
def test_plan_rejects_bad_fields(kwargs):
    with pytest.raises(ValidationError):
        ShiftPlan(**kwargs)


def test_plan_tail_resolution():
    assert ShiftPlan(statistic="cov").resolved_tail() == "two"
    assert ShiftPlan(statistic="kendall").resolved_tail() == "two"
    assert ShiftPlan(statistic="dcov").resolved_tail() == "upper"
    assert ShiftPlan(statistic="dcov", dcov_center=True).resolved_tail() == "two"
    assert ShiftPlan(statistic="cov", tail="lower").resolved_tail() == "lower"


def test_plan_r_max_resolution():
    w = Window(0.0, 2.0, 0.0, 1.0)
    assert ShiftPlan().resolved_r_max(w) == 0.5
    assert ShiftPlan(r_max=0.8).resolved_r_max(w) == 0.8
    with pytest.raises(ValidationError):
        ShiftPlan(r_max=1.0).resolved_r_max(w)
    with pytest.raises(ValidationError):
        ShiftPlan(r_max=0.0).resolved_r_max(w)


def test_input_validation():
    data, residuals = make_dataset(n=30), None
    residuals = np.zeros(30)
    plan = ShiftPlan(K=19)
    with pytest.raises(ValidationError):
        run_shift_test(data, residuals, "nope", plan)
    with pytest.raises(ValidationError):
        run_shift_test(data, np.zeros(29), "x1", plan)
    with pytest.raises(ValidationError):
        run_variance_test(data, residuals, "x1", ShiftPlan(K=19, min_retained=31))
    with pytest.raises(ValidationError):
        run_torus_test(data, residuals, "x1", ShiftPlan(correction="variance", K=19))
    with pytest.raises(ValidationError):
        run_variance_test(data, residuals, "x1", ShiftPlan(correction="torus", K=19))


# ------------------------------------------------------------------- torus

def test_torus_keeps_all_points_and_is_deterministic():
    data = make_dataset(n=50, seed=11)
    rng = np.random.default_rng(2)
    residuals = rng.normal(size=50)
    plan = ShiftPlan(correction="torus", K=29, master_seed=77)

    first = run_torus_test(data, residuals, "x1", plan)
    second = run_torus_test(data, residuals, "x1", plan)

    assert first.p_value == second.p_value
    assert np.array_equal(first.replicate_raw, second.replicate_raw)
    assert np.array_equal(first.shifts, second.shifts)

    assert np.all(first.replicate_n == 50)
    assert first.dropped_replicates == 0
    assert first.k_effective == 29
    assert "keep all n points" in first.note
    # raw values are ranked as-is
    assert np.array_equal(first.replicate_raw, first.replicate_standardized)
    assert first.observed_standardized == first.observed_raw

    other = run_torus_test(data, residuals, "x1",
                           ShiftPlan(correction="torus", K=29, master_seed=78))
    assert not np.array_equal(first.shifts, other.shifts)


def test_torus_replicates_match_manual_reconstruction():
    """Rebuild the first replicates from the documented substream layout."""
    data = make_dataset(n=45, seed=4)
    rng = np.random.default_rng(9)
    residuals = rng.normal(size=45)
    plan = ShiftPlan(correction="torus", K=19, master_seed=(5, 1))
    res = run_torus_test(data, residuals, "x1", plan)

    x = data.covariates["x1"]
    w = data.window
    for k in (1, 2, 3, 4):
        stream = substream((5, 1), k)
        v = np.array([stream.uniform(0.0, w.width), stream.uniform(0.0, w.height)])
        assert np.array_equal(res.shifts[k - 1], v)
        wrapped = torus_wrap(data.locations, v, w)
        pairing = nearest_pairing(data.locations, wrapped)
        stat = evaluate("cov", x[pairing.source_index], residuals[pairing.target_index])
        assert res.replicate_raw[k - 1] == stat.raw

    assert res.provenance["seed"] == [5, 1]
    assert res.provenance["pairing"] == "nearest"


def test_torus_shifts_live_inside_the_window():
    data = make_dataset(n=40, seed=6)
    res = run_torus_test(data, np.random.default_rng(0).normal(size=40), "x2",
                         ShiftPlan(correction="torus", K=39, master_seed=1))
    assert np.all(res.shifts[:, 0] > 0.0) and np.all(res.shifts[:, 0] < 1.0)
    assert np.all(res.shifts[:, 1] > 0.0) and np.all(res.shifts[:, 1] < 1.0)


def test_torus_grid_route_matches_generic_route(monkeypatch):
    """Whole-step shifts on a wrap-compatible lattice: exact index pairing
    and nearest-neighbor pairing after wrapping must agree bit for bit."""
    data, residuals = lattice_dataset(10, 10)
    steps = [(i, j) for i in range(10) for j in range(10) if (i, j) != (0, 0)]
    table = np.array([(i * 0.1, j * 0.1) for i, j in steps[:40]])
    monkeypatch.setattr(engine_mod, "_fixed_shift_table", lambda plan, window: table)
    plan = ShiftPlan(correction="torus", K=40, master_seed=0)

    exact = run_torus_test(data, residuals, "x1", plan)
    assert exact.provenance["pairing"] == "grid-exact"

    monkeypatch.setattr(engine_mod, "detect_grid", lambda locs: None)
    generic = run_torus_test(data, residuals, "x1", plan)
    assert generic.provenance["pairing"] == "nearest"

    assert np.array_equal(exact.replicate_raw, generic.replicate_raw)
    assert exact.p_value == generic.p_value


def test_torus_rejects_zero_shift(monkeypatch):
    data, residuals = lattice_dataset(6, 6)
    table = np.zeros((19, 2))
    monkeypatch.setattr(engine_mod, "_fixed_shift_table", lambda plan, window: table)
    with pytest.raises(ValidationError, match="nonzero"):
        run_torus_test(data, residuals, "x1", ShiftPlan(correction="torus", K=19))


# ---------------------------------------------------------------- variance

def test_variance_retention_and_shift_bounds():
    data = make_dataset(n=80, seed=21)
    residuals = np.random.default_rng(3).normal(size=80)
    plan = ShiftPlan(K=29, master_seed=13, min_retained=15, r_max=0.4)
    res = run_variance_test(data, residuals, "x1", plan)

    assert np.all(res.replicate_n >= 15)
    assert np.all(res.replicate_n <= 80)
    assert np.all(np.abs(res.shifts) <= 0.4)
    assert res.dropped_replicates == 0
    assert res.provenance["r_max"] == 0.4
    assert res.provenance["min_retained"] == 15

    again = run_variance_test(data, residuals, "x1", plan)
    assert res.p_value == again.p_value
    assert np.array_equal(res.replicate_raw, again.replicate_raw)


def test_variance_standardization_recomputed_from_raws():
    data = make_dataset(n=60, seed=8)
    residuals = np.random.default_rng(5).normal(size=60)
    res = run_variance_test(data, residuals, "x1", ShiftPlan(K=19, master_seed=2))

    raws = np.concatenate([[res.observed_raw], res.replicate_raw])
    sizes = np.concatenate([[res.n], res.replicate_n]).astype(float)
    center = raws.mean()
    expected = (raws - center) * np.sqrt(sizes)
    assert res.observed_standardized == pytest.approx(expected[0], rel=1e-12)
    assert res.replicate_standardized == pytest.approx(expected[1:], rel=1e-12)

    extreme = np.sum(np.abs(res.replicate_standardized) >= abs(res.observed_standardized))
    assert res.p_value == (1 + extreme) / (res.k_effective + 1)


def test_variance_redraws_are_counted():
    """A tight retention floor forces some shift vectors to be redrawn."""
    data = make_dataset(n=60, seed=30)
    residuals = np.random.default_rng(7).normal(size=60)
    plan = ShiftPlan(K=19, master_seed=42, min_retained=25)
    res = run_variance_test(data, residuals, "x1", plan)
    assert int(res.redraws.sum()) > 0
    assert np.all(res.replicate_n >= 25)
    # redrawn replicates still come from their own substream
    again = run_variance_test(data, residuals, "x1", plan)
    assert np.array_equal(res.redraws, again.redraws)
    assert np.array_equal(res.shifts, again.shifts)


def test_variance_exhausts_when_retention_is_impossible():
    data = make_dataset(n=12, seed=1)
    plan = ShiftPlan(K=19, min_retained=12)
    with pytest.raises(ShiftExhausted, match="redraws"):
        run_variance_test(data, np.zeros(12), "x1", plan)


def test_variance_grid_route_matches_generic_route(monkeypatch):
    data, residuals = lattice_dataset(10, 10, seed=14)
    steps = [(i, j) for i in range(-3, 4) for j in range(-3, 4) if (i, j) != (0, 0)]
    table = np.array([(i * 0.1, j * 0.1) for i, j in steps])
    monkeypatch.setattr(engine_mod, "_fixed_shift_table", lambda plan, window: table)
    plan = ShiftPlan(K=len(table), master_seed=0, min_retained=10)

    exact = run_variance_test(data, residuals, "x1", plan)
    assert exact.provenance["pairing"] == "grid-exact"
    assert exact.dropped_replicates == 0

    monkeypatch.setattr(engine_mod, "detect_grid", lambda locs: None)
    generic = run_variance_test(data, residuals, "x1", plan)
    assert generic.provenance["pairing"] == "nearest"

    assert np.array_equal(exact.replicate_n, generic.replicate_n)
    assert np.array_equal(exact.replicate_raw, generic.replicate_raw)
    assert exact.p_value == generic.p_value
    # retained counts follow the overlap arithmetic exactly
    expected_n = [(10 - abs(i)) * (10 - abs(j)) for i, j in steps]
    assert np.array_equal(exact.replicate_n, expected_n)


def test_fixed_grid_drops_unusable_vectors():
    """Data confined to a thin strip: only shifts along the strip retain
    enough pairs, everything else is dropped with a recorded reason."""
    rng = np.random.default_rng(17)
    n = 40
    locs = np.stack([rng.uniform(0.0, 0.08, n), rng.uniform(0.0, 1.0, n)], axis=1)
    data = SpatialDataset(window=UNIT_SQUARE, locations=locs,
                          covariates={"x1": rng.normal(size=n)},
                          response=rng.normal(size=n))
    plan = ShiftPlan(K=24, shift_mode="fixed_grid", separation=0.05,
                     master_seed=0, min_retained=10)
    res = run_variance_test(data, rng.normal(size=n), "x1", plan)

    assert res.dropped_replicates > 0
    assert res.k_effective == 24 - res.dropped_replicates
    assert res.k_effective >= 2
    assert all("fixed shift unusable" in r for r in res.dropped_reasons)
    dropped = np.isnan(res.replicate_raw)
    assert dropped.sum() == res.dropped_replicates
    assert np.all(res.replicate_n[dropped] == 0)
    assert np.all(np.isnan(res.replicate_standardized[dropped]))
    assert 0.0 < res.p_value <= 1.0
    assert res.provenance["separation"] == 0.05

    payload = res.to_dict()
    assert payload["replicates"]["raw"][int(np.flatnonzero(dropped)[0])] is None
    assert payload["k_effective"] == res.k_effective


def test_fixed_grid_shift_table_is_deterministic():
    from shiftreg.geometry import fixed_grid_shifts
    data = make_dataset(n=60, seed=2)
    plan = ShiftPlan(K=19, shift_mode="fixed_grid", separation=0.1, master_seed=5)
    res = run_variance_test(data, np.random.default_rng(1).normal(size=60), "x1", plan)
    table = fixed_grid_shifts(data.window, 19, 0.1, plan.resolved_r_max(data.window))
    assert np.array_equal(res.shifts, table)
    assert np.all(res.redraws == 0)


# ------------------------------------------------------- dcov special cases

def test_degenerate_observed_dcov_gives_p_one():
    data = make_dataset(n=30, seed=9)
    constant = np.zeros(30)
    for runner, correction in ((run_torus_test, "torus"),
                               (run_variance_test, "variance")):
        plan = ShiftPlan(correction=correction, statistic="dcov", K=19)
        res = runner(data, constant, "x1", plan)
        assert res.p_value == 1.0
        assert res.degenerate_observed
        assert "degenerate" in res.note


def test_dcov_centering_changes_tail_and_note():
    data = make_dataset(n=40, seed=12)
    residuals = np.random.default_rng(4).normal(size=40)
    plain = run_variance_test(data, residuals, "x1",
                              ShiftPlan(statistic="dcov", K=39, master_seed=3))
    centered = run_variance_test(data, residuals, "x1",
                                 ShiftPlan(statistic="dcov", K=39, master_seed=3,
                                           dcov_center=True))
    assert plain.tail == "upper"
    assert centered.tail == "two"
    assert "centered at the mean before ranking" in centered.note
    assert "centered at the mean" not in plain.note
    # centering shifts every standardized value by the same constant
    diff = plain.replicate_standardized - centered.replicate_standardized
    assert np.allclose(diff, diff[0])


def test_tail_override_and_p_value_consistency():
    data = make_dataset(n=50, seed=15)
    residuals = np.random.default_rng(6).normal(size=50)
    plan = ShiftPlan(K=29, master_seed=8, tail="upper")
    res = run_variance_test(data, residuals, "x1", plan)
    assert res.tail == "upper"
    valid = np.isfinite(res.replicate_standardized)
    assert res.p_value == rank_p_value(res.observed_standardized,
                                       res.replicate_standardized[valid], "upper")


# ----------------------------------------------------------------- dispatch

def test_run_shift_test_dispatches_on_correction():
    data = make_dataset(n=40, seed=19)
    residuals = np.random.default_rng(2).normal(size=40)
    t = run_shift_test(data, residuals, "x1", ShiftPlan(correction="torus", K=19))
    v = run_shift_test(data, residuals, "x1", ShiftPlan(correction="variance", K=19))
    assert t.correction == "torus"
    assert v.correction == "variance"
    assert t.provenance["correction"] == "torus"


def test_provenance_extras_are_merged():
    data = make_dataset(n=30, seed=22)
    res = run_shift_test(data, np.random.default_rng(1).normal(size=30), "x1",
                         ShiftPlan(K=19), provenance={"origin": "unit-test"})
    assert res.provenance["origin"] == "unit-test"
    assert res.provenance["statistic"] == "cov"
    assert res.provenance["k"] == 19
