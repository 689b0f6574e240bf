"""Gaussian random field sampling, error-field scenarios, and study designs.

Scenario tags name the error structures used throughout the simulation
studies; each is a short code for what it does:

    SE1  squared-exponential GP, partial sill 1, range 0.2, nugget 1
    SE4  same with partial sill 4
    E1   exponential GP, partial sill 4 (override via `variance`), nugget 1
    N    SE1 field plus a +/-0.5 checkerboard offset on a 4x4 partition
    LN   exponentiated SE1 field (log-Gaussian, skewed, nonnegative)
    NS   nonstationary kernel-convolution field, unit variance

Designs bundle covariate fields with a mean trend into a ready dataset:

    single_nuisance   x1 in the trend, x2 independent of everything
    multi_independent x1..x4 independent fields, x3 never in the trend
    multi_dependent   as above but x4 has mean dependence_scale * x1
    multi_confounded  x4 depends on x1 but the trend excludes x4

Linear trends add covariates as-is; nonlinear trends use exp(x1), x2^2 and
x4^3 (single-nuisance: x1^2). A nonzero `effect` adds effect * x2 (linear)
or effect * x2^2 (nonlinear), giving the interest covariate a real signal
for power runs.
"""

from __future__ import annotations

import numpy as np

from .dataset import SpatialDataset
from .errors import NotPositiveDefinite
from .geometry import UNIT_SQUARE, Window
from .kernels import DEFAULT_NS, Kernel, kernel_matrix, ns_kernel_matrix

SCENARIOS = ("SE1", "SE4", "E1", "N", "LN", "NS")
DESIGNS = ("single_nuisance", "multi_independent", "multi_dependent", "multi_confounded")
TRENDS = ("linear", "nonlinear")

# relative diagonal jitter ladder tried before giving up on a Cholesky
_JITTER_LADDER = (1e-10, 1e-8, 1e-6)


def cholesky_with_jitter(cov: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor, retrying with escalating diagonal jitter.

    ``scale`` sets the jitter unit (the kernel variance); the ladder tries
    1e-10, 1e-8 and 1e-6 times that before raising NotPositiveDefinite.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(cov.shape[0])
    for level in _JITTER_LADDER:
        try:
            return np.linalg.cholesky(cov + level * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"covariance stayed non-positive-definite after jitter up to "
        f"{_JITTER_LADDER[-1] * scale:g}"
    )


def sample_gp(points, kernel: Kernel | None, rng: np.random.Generator,
              mean=0.0, cov: np.ndarray | None = None) -> np.ndarray:
    """One draw from a Gaussian process at fixed points.

    Either a Kernel or a precomputed covariance matrix must be supplied;
    passing ``cov`` lets callers reuse a factorization-ready matrix when
    sampling repeatedly at the same locations. The draw is mean + L z with
    z standard normal from ``rng``, so a fixed generator state reproduces
    the draw bit for bit.
    """
    p = np.asarray(points, dtype=float)
    if cov is None:
        if kernel is None:
            raise ValueError("need a kernel or a covariance matrix")
        cov = kernel_matrix(kernel, p)
        scale = kernel.variance
    else:
        scale = float(np.mean(np.diag(cov))) or 1.0
    lower = cholesky_with_jitter(np.asarray(cov, dtype=float), scale)
    z = rng.standard_normal(p.shape[0])
    return np.asarray(mean, dtype=float) + lower @ z


def checkerboard_offset(points, window: Window = UNIT_SQUARE,
                        amplitude: float = 0.5, cells: int = 4) -> np.ndarray:
    """Alternating +/-amplitude offset on a cells x cells window partition.

    Edge-adjacent subwindows always get opposite signs (parity of the cell
    index sum). Points on an interior cell boundary belong to the upper cell;
    the top row and right column are closed so boundary points stay inside.
    """
    p = np.asarray(points, dtype=float)
    fx = (p[:, 0] - window.x_min) / window.width * cells
    fy = (p[:, 1] - window.y_min) / window.height * cells
    ix = np.minimum(np.floor(fx).astype(int), cells - 1)
    iy = np.minimum(np.floor(fy).astype(int), cells - 1)
    return amplitude * np.where((ix + iy) % 2 == 0, 1.0, -1.0)


def scenario_kernel(tag: str, variance: float | None = None) -> Kernel | None:
    """Stationary kernel behind a scenario tag (None for the NS tag)."""
    if tag in ("SE1", "N", "LN"):
        return Kernel("squared_exponential", variance=variance or 1.0, range_=0.2, nugget=1.0)
    if tag == "SE4":
        return Kernel("squared_exponential", variance=variance or 4.0, range_=0.2, nugget=1.0)
    if tag == "E1":
        return Kernel("exponential", variance=variance or 4.0, range_=0.2, nugget=1.0)
    if tag == "NS":
        return None
    raise ValueError(f"unknown scenario tag {tag!r}")


def scenario_field(tag: str, points, rng: np.random.Generator,
                   window: Window = UNIT_SQUARE,
                   variance: float | None = None) -> np.ndarray:
    """One realization of the error field for a scenario tag."""
    if tag not in SCENARIOS:
        raise ValueError(f"unknown scenario tag {tag!r}; choose from {SCENARIOS}")
    if tag == "NS":
        cov = ns_kernel_matrix(points, DEFAULT_NS)
        if variance is not None:
            cov = cov * (variance / DEFAULT_NS.variance)
        return sample_gp(points, None, rng, cov=cov)
    base = sample_gp(points, scenario_kernel(tag, variance), rng)
    if tag == "N":
        return base + checkerboard_offset(points, window)
    if tag == "LN":
        return np.exp(base)
    return base


# covariate fields shared by the multi-covariate designs
_COVARIATE_KERNELS = {
    "x1": Kernel("exponential", variance=1.0, range_=0.2),
    "x2": Kernel("stable", variance=1.0, range_=0.1, shape=0.5),
    "x3": Kernel("matern", variance=1.0, range_=0.1, smoothness=2.0),
    "x4": Kernel("gen_cauchy", variance=1.0, range_=0.1, alpha=2.0, beta=5.0),
}


def design_covariates(design: str, points, rng: np.random.Generator,
                      dependence_scale: float = 1.0) -> dict[str, np.ndarray]:
    """Covariate fields for a design, drawn in a fixed column order."""
    if design == "single_nuisance":
        kern = Kernel("exponential", variance=1.0, range_=0.2)
        return {"x1": sample_gp(points, kern, rng), "x2": sample_gp(points, kern, rng)}
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}; choose from {DESIGNS}")
    cov = {name: sample_gp(points, _COVARIATE_KERNELS[name], rng)
           for name in ("x1", "x2", "x3", "x4")}
    if design in ("multi_dependent", "multi_confounded"):
        cov["x4"] = sample_gp(points, _COVARIATE_KERNELS["x4"], rng,
                              mean=dependence_scale * cov["x1"])
    return cov


def _trend(design: str, trend: str, cov: dict[str, np.ndarray],
           effect: float) -> np.ndarray:
    if trend not in TRENDS:
        raise ValueError(f"unknown trend {trend!r}; choose from {TRENDS}")
    x1 = cov["x1"]
    if design == "single_nuisance":
        mean = -0.5 + (x1 if trend == "linear" else x1**2)
    elif trend == "linear":
        mean = -0.5 + x1 + cov["x2"]
        if design != "multi_confounded":
            mean = mean + cov["x4"]
    else:
        mean = -0.5 + np.exp(x1) + cov["x2"] ** 2
        if design != "multi_confounded":
            mean = mean + cov["x4"] ** 3
    if effect:
        mean = mean + effect * (cov["x2"] if trend == "linear" else cov["x2"] ** 2)
    return mean


def generate_design(design: str, trend: str, n: int, rng: np.random.Generator,
                    window: Window = UNIT_SQUARE, scenario: str = "SE1",
                    scenario_variance: float | None = None, effect: float = 0.0,
                    dependence_scale: float = 1.0) -> SpatialDataset:
    """Sample a full dataset: uniform locations, covariates, trend, error.

    The `effect` term only makes sense for the single-nuisance design, where
    x2 is otherwise pure noise; the multi designs already include x2 in the
    trend. Draw order (locations, covariates in name order, error field) is
    fixed so a seeded generator reproduces the dataset exactly.
    """
    if n < 4:
        raise ValueError("need at least 4 locations")
    locations = np.column_stack([
        rng.uniform(window.x_min, window.x_max, n),
        rng.uniform(window.y_min, window.y_max, n),
    ])
    cov = design_covariates(design, locations, rng, dependence_scale=dependence_scale)
    eps = scenario_field(scenario, locations, rng, window=window, variance=scenario_variance)
    response = _trend(design, trend, cov, effect) + eps
    return SpatialDataset(window=window, locations=locations,
                          covariates=cov, response=response)


def substream(master_seed, *path: int) -> np.random.Generator:
    """Independent generator keyed by a seed and an integer path.

    Used everywhere a worker or replicate needs its own stream: the key
    (master_seed, *path) is fed to the seed sequence, so results never
    depend on scheduling order. ``master_seed`` may itself be a tuple of
    integers (a parent path), which is flattened into the key.
    """
    head = list(master_seed) if isinstance(master_seed, (tuple, list)) else [master_seed]
    return np.random.default_rng([*map(int, head), *map(int, path)])
