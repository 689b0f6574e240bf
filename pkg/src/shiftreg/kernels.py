"""Stationary and nonstationary covariance kernels.

All stationary families are parameterized the same way: a partial sill
``variance`` scaling a correlation that decays with distance h over a
``range_`` parameter phi, plus an optional ``nugget`` added only at exactly
zero distance. Correlations use the plain h/phi convention:

    squared_exponential   exp(-(h/phi)^2)
    exponential           exp(-h/phi)
    stable                exp(-(h/phi)^shape)
    matern                2^(1-nu)/Gamma(nu) * (h/phi)^nu * K_nu(h/phi)
    gen_cauchy            (1 + (h/phi)^alpha)^(-beta/alpha)

Matern smoothness 2 is evaluated through the Bessel form; half-integer
smoothness 0.5, 1.5 and 2.5 use their closed forms (identical values, no
Bessel call). The nonstationary kernel composes four anchored anisotropy
matrices with Gaussian mixture weights; see NonstationaryConfig.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv

FAMILIES = ("squared_exponential", "exponential", "stable", "matern", "gen_cauchy")

# distances below this fraction of the range are treated as exactly zero
# inside the Bessel branch, where u^nu * K_nu(u) underflows to 0 * inf
_MATERN_TINY = 1e-12


@dataclass(frozen=True)
class Kernel:
    """One stationary covariance: family plus its parameters.

    ``shape`` is the stable exponent, ``smoothness`` the Matern nu, and
    ``alpha``/``beta`` the generalized Cauchy exponents; each is ignored by
    the families that do not use it.
    """

    family: str
    variance: float = 1.0
    range_: float = 0.2
    nugget: float = 0.0
    shape: float = 1.0
    smoothness: float = 0.5
    alpha: float = 2.0
    beta: float = 5.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.range_ <= 0:
            raise ValueError("range must be positive")
        if self.nugget < 0:
            raise ValueError("nugget must be nonnegative")
        if self.family == "stable" and not 0 < self.shape <= 2:
            raise ValueError("stable shape must lie in (0, 2]")
        if self.family == "matern" and self.smoothness <= 0:
            raise ValueError("matern smoothness must be positive")
        if self.family == "gen_cauchy" and (self.alpha <= 0 or self.alpha > 2 or self.beta <= 0):
            raise ValueError("gen_cauchy needs 0 < alpha <= 2 and beta > 0")

    @property
    def sill(self) -> float:
        """Total variance at distance zero."""
        return self.variance + self.nugget


def matern_correlation(u, smoothness: float) -> np.ndarray:
    """Matern correlation at scaled distance u = h / phi."""
    u = np.asarray(u, dtype=float)
    nu = smoothness
    if nu == 0.5:
        return np.exp(-u)
    if nu == 1.5:
        return (1.0 + u) * np.exp(-u)
    if nu == 2.5:
        return (1.0 + u + u * u / 3.0) * np.exp(-u)
    out = np.ones_like(u)
    pos = u > _MATERN_TINY
    up = u[pos]
    out[pos] = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * up**nu * kv(nu, up)
    return out


def correlation(kernel: Kernel, h) -> np.ndarray:
    """Correlation (no sill, no nugget) at distances h."""
    u = np.asarray(h, dtype=float) / kernel.range_
    fam = kernel.family
    if fam == "squared_exponential":
        return np.exp(-(u * u))
    if fam == "exponential":
        return np.exp(-u)
    if fam == "stable":
        return np.exp(-(u**kernel.shape))
    if fam == "matern":
        return matern_correlation(u, kernel.smoothness)
    if fam == "gen_cauchy":
        return (1.0 + u**kernel.alpha) ** (-kernel.beta / kernel.alpha)
    raise ValueError(f"unknown kernel family {fam!r}")


def kernel_eval(kernel: Kernel, h) -> np.ndarray:
    """Covariance at distances h, nugget applied where h is exactly zero."""
    h = np.asarray(h, dtype=float)
    c = kernel.variance * correlation(kernel, h)
    if kernel.nugget:
        c = c + np.where(h == 0.0, kernel.nugget, 0.0)
    return c


def pairwise_distances(points_a, points_b=None) -> np.ndarray:
    a = np.asarray(points_a, dtype=float)
    b = a if points_b is None else np.asarray(points_b, dtype=float)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def kernel_matrix(kernel: Kernel, points_a, points_b=None) -> np.ndarray:
    """Covariance matrix between two point sets (or one set with itself)."""
    return kernel_eval(kernel, pairwise_distances(points_a, points_b))


def variogram(kernel: Kernel, h) -> np.ndarray:
    """Semivariogram gamma(h) = sill - C(h) for strictly positive h."""
    h = np.asarray(h, dtype=float)
    return kernel.variance * (1.0 - correlation(kernel, h)) + kernel.nugget


# ---------------------------------------------------------------------------
# nonstationary kernel: anchored anisotropies blended by Gaussian weights
# ---------------------------------------------------------------------------

def _logistic(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class NonstationaryConfig:
    """Spatially varying anisotropy built from four anchor points.

    At each anchor b_k, a local 2x2 kernel matrix Sigma_k is formed from two
    log-linear eigenvalue fields and a rotation angle field:

        lam1(s) = exp(c0 + c1 s_x + c2 s_y)      (first eigenvalue)
        lam2(s) = likewise with its own coefficients
        eta(s)  = (pi/2) * logistic(c0 + c1 s_x + c2 s_y)   (angle)

    The field of matrices is the normalized Gaussian-weight blend of the four
    anchored Sigma_k with bandwidth lambda_w. Pairwise covariance follows the
    kernel-convolution construction: a determinant-ratio prefactor times a
    correlation g evaluated at the Mahalanobis distance under the averaged
    matrix, here with exponential g (Matern smoothness 0.5).
    """

    centres: tuple = ((0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75))
    lam1_coeffs: tuple = (-1.3, 0.5, -0.6)
    lam2_coeffs: tuple = (-1.4, -0.1, 0.2)
    eta_coeffs: tuple = (0.0, -0.15, 0.15)
    weight_bandwidth: float = 0.0625
    variance: float = 1.0
    smoothness: float = 0.5


DEFAULT_NS = NonstationaryConfig()


def ns_local_parameters(config: NonstationaryConfig = DEFAULT_NS) -> dict:
    """Local (lam1, lam2, eta) evaluated at each anchor point."""
    out = {}
    for cx, cy in config.centres:
        c = np.array([1.0, cx, cy])
        lam1 = float(np.exp(c @ config.lam1_coeffs))
        lam2 = float(np.exp(c @ config.lam2_coeffs))
        eta = float(np.pi / 2 * _logistic(c @ config.eta_coeffs))
        out[(cx, cy)] = (lam1, lam2, eta)
    return out


def _anchor_matrices(config: NonstationaryConfig) -> np.ndarray:
    """The four anchored 2x2 matrices R(eta) diag(lam1, lam2) R(eta)^T."""
    mats = np.empty((len(config.centres), 2, 2))
    for k, ((lam1, lam2, eta)) in enumerate(ns_local_parameters(config).values()):
        c, s = np.cos(eta), np.sin(eta)
        rot = np.array([[c, -s], [s, c]])
        mats[k] = rot @ np.diag([lam1, lam2]) @ rot.T
    return mats


def ns_matrix_field(points, config: NonstationaryConfig = DEFAULT_NS) -> np.ndarray:
    """Blended local matrix Sigma(s) at every point, shape (n, 2, 2)."""
    p = np.asarray(points, dtype=float)
    centres = np.asarray(config.centres, dtype=float)
    d2 = ((p[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
    w = np.exp(-d2 / (2.0 * config.weight_bandwidth))
    w /= w.sum(axis=1, keepdims=True)
    return np.einsum("nk,kij->nij", w, _anchor_matrices(config))


def ns_kernel_matrix(points, config: NonstationaryConfig = DEFAULT_NS) -> np.ndarray:
    """Nonstationary covariance matrix over one point set.

    C(s_i, s_j) = variance * |S_i|^{1/4} |S_j|^{1/4} / |(S_i+S_j)/2|^{1/2}
                  * g(sqrt(Q_ij)),
    with Q_ij the squared Mahalanobis distance under the averaged matrix and
    g the Matern correlation at the configured smoothness.
    """
    p = np.asarray(points, dtype=float)
    sig = ns_matrix_field(p, config)
    a = sig[:, 0, 0]
    b = sig[:, 0, 1]
    c = sig[:, 1, 1]
    det = a * c - b * b

    am = 0.5 * (a[:, None] + a[None, :])
    bm = 0.5 * (b[:, None] + b[None, :])
    cm = 0.5 * (c[:, None] + c[None, :])
    detm = am * cm - bm * bm

    dx = p[:, 0, None] - p[None, :, 0]
    dy = p[:, 1, None] - p[None, :, 1]
    # quadratic form under the inverse of the averaged 2x2 matrix
    q = (cm * dx * dx - 2.0 * bm * dx * dy + am * dy * dy) / detm
    q = np.maximum(q, 0.0)

    prefac = (det[:, None] * det[None, :]) ** 0.25 / np.sqrt(detm)
    cov = config.variance * prefac * matern_correlation(np.sqrt(q), config.smoothness)
    # exact symmetry can be lost to rounding in the quadratic form
    return 0.5 * (cov + cov.T)
