"""Covariance kernels, stationary and nonstationary."""

import numpy as np
import pytest

from shiftreg import DEFAULT_NS, Kernel, kernel_matrix, ns_kernel_matrix, ns_local_parameters
from shiftreg.kernels import (correlation, kernel_eval, matern_correlation,
                              ns_matrix_field, pairwise_distances, variogram)


def test_sill_and_nugget_at_zero_distance():
    k = Kernel("squared_exponential", variance=2.0, range_=0.3, nugget=0.5)
    assert kernel_eval(k, 0.0) == pytest.approx(2.5)
    assert kernel_eval(k, 1e-12) == pytest.approx(2.0, rel=1e-6)  # nugget only at h == 0


def test_correlation_is_one_at_zero_for_every_family():
    kernels = [
        Kernel("squared_exponential"),
        Kernel("exponential"),
        Kernel("stable", shape=0.5),
        Kernel("matern", smoothness=2.0),
        Kernel("gen_cauchy", alpha=2.0, beta=5.0),
    ]
    for k in kernels:
        assert correlation(k, 0.0) == pytest.approx(1.0)
        # monotone decay along a short grid
        h = np.linspace(0, 1, 30)
        c = correlation(k, h)
        assert np.all(np.diff(c) <= 1e-12)


def test_matern_half_equals_exponential():
    h = np.linspace(0, 1, 50)
    m = Kernel("matern", smoothness=0.5, range_=0.2)
    e = Kernel("exponential", range_=0.2)
    assert np.allclose(correlation(m, h), correlation(e, h), rtol=1e-12)


def test_matern_bessel_branch_matches_closed_forms():
    # nu = 1.5 and 2.5 have closed forms; force the Bessel branch by a nudge
    u = np.linspace(0.01, 5, 40)
    for nu in (1.5, 2.5):
        exact = matern_correlation(u, nu)
        bessel = matern_correlation(u, nu + 1e-13)
        assert np.allclose(exact, bessel, rtol=1e-8)


def test_stable_shape_one_is_exponential():
    h = np.linspace(0, 1, 50)
    assert np.allclose(correlation(Kernel("stable", shape=1.0), h),
                       correlation(Kernel("exponential"), h))


def test_kernel_matrices_are_positive_semidefinite():
    r = np.random.default_rng(0)
    pts = r.uniform(size=(35, 2))
    for k in (Kernel("squared_exponential", nugget=1.0),
              Kernel("exponential", variance=4.0),
              Kernel("stable", shape=0.5, range_=0.1),
              Kernel("matern", smoothness=2.0, range_=0.1),
              Kernel("gen_cauchy", range_=0.1)):
        cov = kernel_matrix(k, pts)
        assert np.allclose(cov, cov.T)
        w = np.linalg.eigvalsh(cov)
        assert w.min() > -1e-8 * w.max()


def test_variogram_complements_covariance():
    k = Kernel("exponential", variance=3.0, range_=0.25, nugget=0.5)
    h = np.array([0.05, 0.2, 1.0])
    assert np.allclose(variogram(k, h) + kernel_eval(k, h), k.sill)


def test_kernel_parameter_validation():
    with pytest.raises(ValueError):
        Kernel("boxcar")
    with pytest.raises(ValueError):
        Kernel("stable", shape=2.5)
    with pytest.raises(ValueError):
        Kernel("matern", smoothness=0.0)
    with pytest.raises(ValueError):
        Kernel("exponential", variance=-1.0)


def test_ns_local_parameters_match_their_log_linear_forms():
    params = ns_local_parameters()
    c = DEFAULT_NS
    for (cx, cy), (lam1, lam2, eta) in params.items():
        z = np.array([1.0, cx, cy])
        assert lam1 == pytest.approx(np.exp(z @ c.lam1_coeffs))
        assert lam2 == pytest.approx(np.exp(z @ c.lam2_coeffs))
        assert eta == pytest.approx(np.pi / 2 / (1 + np.exp(-(z @ c.eta_coeffs))))
    assert len(params) == 4


def test_ns_matrix_field_blends_toward_anchors():
    # at an anchor, the Gaussian weights concentrate on that anchor's matrix
    anchors = np.asarray(DEFAULT_NS.centres)
    field = ns_matrix_field(anchors)
    for mats in field:
        w = np.linalg.eigvalsh(mats)
        assert w.min() > 0


def test_ns_kernel_matrix_symmetric_psd_unit_diag():
    r = np.random.default_rng(1)
    pts = r.uniform(size=(30, 2))
    cov = ns_kernel_matrix(pts)
    assert np.allclose(cov, cov.T)
    assert np.allclose(np.diag(cov), DEFAULT_NS.variance)
    w = np.linalg.eigvalsh(cov)
    assert w.min() > -1e-8
    # correlation strictly below 1 off the diagonal
    off = cov - np.diag(np.diag(cov))
    assert off.max() < 1.0


def test_pairwise_distances_agree_with_norm():
    r = np.random.default_rng(2)
    a, b = r.uniform(size=(10, 2)), r.uniform(size=(7, 2))
    d = pairwise_distances(a, b)
    assert d.shape == (10, 7)
    assert d[3, 4] == pytest.approx(np.linalg.norm(a[3] - b[4]))
