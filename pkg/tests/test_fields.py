"""Synthetic designs: error scenarios, covariate fields, seeded streams."""

import numpy as np
import pytest

from shiftreg import (DESIGNS, SCENARIOS, TRENDS, UNIT_SQUARE, Window,
                      generate_design, scenario_field, scenario_kernel,
                      substream)
from shiftreg.fields import checkerboard_offset, sample_gp
from shiftreg.kernels import Kernel, kernel_matrix


def test_scenario_tags_complete():
    assert set(SCENARIOS) == {"SE1", "SE4", "E1", "N", "LN", "NS"}
    assert set(DESIGNS) == {"single_nuisance", "multi_independent",
                            "multi_dependent", "multi_confounded"}
    assert set(TRENDS) == {"linear", "nonlinear"}


def test_scenario_kernels_variances():
    assert scenario_kernel("SE1").variance == 1.0
    assert scenario_kernel("SE4").variance == 4.0
    assert scenario_kernel("E1").variance == 4.0
    assert scenario_kernel("E1", variance=1.0).variance == 1.0
    assert scenario_kernel("NS") is None
    for tag in ("SE1", "SE4", "E1"):
        assert scenario_kernel(tag).nugget == 1.0


def test_scenario_field_shapes_and_determinism():
    r = np.random.default_rng(0)
    pts = r.uniform(size=(30, 2))
    for tag in SCENARIOS:
        a = scenario_field(tag, pts, np.random.default_rng(7))
        b = scenario_field(tag, pts, np.random.default_rng(7))
        assert a.shape == (30,)
        assert np.array_equal(a, b)


def test_lognormal_scenario_is_positive():
    r = np.random.default_rng(1)
    pts = r.uniform(size=(50, 2))
    assert (scenario_field("LN", pts, r) > 0).all()


def test_checkerboard_offset_alternates_signs():
    # centers of the 16 subcells of the unit square
    centers = np.array([[(i + 0.5) / 4, (j + 0.5) / 4]
                        for i in range(4) for j in range(4)])
    vals = checkerboard_offset(centers)
    assert set(np.unique(vals)) == {-0.5, 0.5}
    grid = vals.reshape(4, 4)
    assert np.all(grid[0, :-1] != grid[0, 1:])  # neighbors differ along y
    assert np.all(grid[:-1, 0] != grid[1:, 0])  # and along x


def test_checkerboard_scales_with_window():
    pts = np.array([[0.2, 0.2], [0.45, 0.2]])
    big = checkerboard_offset(pts, window=Window(0.0, 2.0, 0.0, 2.0))
    unit = checkerboard_offset(pts)
    assert big[0] == big[1]      # same 0.5-wide cell of the 2 x 2 window
    assert unit[0] != unit[1]    # different 0.25-wide cells of the unit window


def test_sample_gp_matches_decomposition_contract():
    r = np.random.default_rng(2)
    pts = r.uniform(size=(20, 2))
    k = Kernel("squared_exponential", variance=1.0, range_=0.2)
    draws = np.array([sample_gp(pts, k, np.random.default_rng(s))
                      for s in range(400)])
    emp = np.cov(draws.T)
    ref = kernel_matrix(k, pts)
    assert np.abs(emp - ref).max() < 0.35  # loose moment check


def test_single_nuisance_design_columns_and_trend():
    data = generate_design("single_nuisance", "linear", 50,
                           np.random.default_rng(3))
    assert data.covariate_names == ["x1", "x2"]
    assert data.response.shape == (50,)
    assert UNIT_SQUARE.contains(data.locations).all()


def test_multi_design_columns_and_null_covariate():
    data = generate_design("multi_independent", "nonlinear", 40,
                           np.random.default_rng(4))
    assert data.covariate_names == ["x1", "x2", "x3", "x4"]


def test_confounded_design_drops_x4_from_trend():
    # same seed: identical fields; the confounded trend omits x4, so the
    # responses differ exactly by x4's contribution
    a = generate_design("multi_dependent", "linear", 30, np.random.default_rng(5))
    b = generate_design("multi_confounded", "linear", 30, np.random.default_rng(5))
    assert np.allclose(a.response - b.response, a.covariates["x4"])


def test_dependent_design_couples_x4_to_x1():
    rs = [generate_design("multi_dependent", "linear", 80,
                          np.random.default_rng(s), dependence_scale=2.0)
          for s in range(10)]
    corr = np.mean([np.corrcoef(d.covariates["x1"], d.covariates["x4"])[0, 1]
                    for d in rs])
    base = np.mean([np.corrcoef(d.covariates["x1"], d.covariates["x4"])[0, 1]
                    for d in (generate_design("multi_independent", "linear", 80,
                                              np.random.default_rng(s))
                              for s in range(10))])
    assert corr > 0.5 > abs(base) + 0.2


def test_effect_shifts_the_trend():
    null = generate_design("single_nuisance", "linear", 30,
                           np.random.default_rng(6))
    alt = generate_design("single_nuisance", "linear", 30,
                          np.random.default_rng(6), effect=1.5)
    assert np.allclose(alt.response - null.response, 1.5 * null.covariates["x2"])
    alt_nl = generate_design("single_nuisance", "nonlinear", 30,
                             np.random.default_rng(6), effect=1.5)
    null_nl = generate_design("single_nuisance", "nonlinear", 30,
                              np.random.default_rng(6))
    assert np.allclose(alt_nl.response - null_nl.response,
                       1.5 * null_nl.covariates["x2"] ** 2)


def test_generate_design_respects_window():
    w = Window(0.0, 3.0, 0.0, 3.0)
    data = generate_design("single_nuisance", "linear", 60,
                           np.random.default_rng(7), window=w)
    assert data.window == w
    assert w.contains(data.locations).all()
    assert data.locations.max() > 1.5  # actually uses the bigger window


def test_substream_independence_and_tuple_seeds():
    a = substream(0, 1, 2).normal(size=5)
    b = substream(0, 1, 3).normal(size=5)
    c = substream(0, 1, 2).normal(size=5)
    assert np.array_equal(a, c)
    assert not np.array_equal(a, b)
    t = substream((0, 1), 2).normal(size=5)
    assert np.array_equal(t, a)  # tuple head flattens into the same key


def test_generate_design_rejects_bad_tags():
    with pytest.raises(ValueError):
        generate_design("hexagonal", "linear", 30, np.random.default_rng(0))
    with pytest.raises(ValueError):
        generate_design("single_nuisance", "cubic", 30, np.random.default_rng(0))
    with pytest.raises(ValueError):
        scenario_field("XX", np.zeros((4, 2)), np.random.default_rng(0))
