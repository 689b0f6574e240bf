"""Reconstruction of nuisance covariates relative to the covariate of
interest, and residual extraction for the shift tests.

Each nuisance covariate x_j is split against the interest covariate z into
a dependence part g_j(z) and a remainder delta_j = x_j - g_j(z), then put
back together as

    x_tilde_j = theta * g_j(z) + delta_j,      theta in [0, 1].

theta = 1 keeps the covariates as observed, theta = 0 strips every part of
x_j that the dependence fit can attribute to z. The theta = 1 case returns
the original columns untouched (not g + delta recombined), so downstream
results match a raw-covariate run bit for bit.

The dependence fit g_j defaults to the flavor of the main trend fitter:
simple linear for the lm and gls kinds, a 1-D kernel regression for the
rest. Both can be overridden, including with a penalized 1-D smooth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import SpatialDataset
from ..errors import ValidationError
from .base import FITTER_KINDS, FittedModel
from .linear import fit_gls_variogram, fit_lm_ml
from .nadaraya import fit_nw
from .thinplate import fit_gam, fit_smooth_1d

G_KINDS = ("lm", "nw", "smooth")


def default_g_kind(f_kind: str) -> str:
    """Dependence-fit flavor matching the main fitter: linear kinds get a
    linear g, nonparametric kinds get a kernel g."""
    return "lm" if f_kind in ("lm", "gls") else "nw"


def _fit_g(z: np.ndarray, xj: np.ndarray, g_kind: str) -> np.ndarray:
    """Fitted values of one dependence regression x_j ~ z."""
    if g_kind == "lm":
        design = np.column_stack([np.ones(z.shape[0]), z])
        coef, *_ = np.linalg.lstsq(design, xj, rcond=None)
        return design @ coef
    if g_kind == "nw":
        return fit_nw(z[:, None], xj).fitted
    if g_kind == "smooth":
        return fit_smooth_1d(z, xj).fitted
    raise ValidationError(f"unknown dependence fitter {g_kind!r}; "
                          f"expected one of {G_KINDS}")


@dataclass(frozen=True)
class ThetaReconstruction:
    """Nuisance covariates rebuilt at a given theta.

    ``columns`` maps each nuisance name to its reconstructed values in the
    dataset's covariate order (interest excluded). ``dependence`` and
    ``remainder`` hold g_j(z) and delta_j; both are None on the theta = 1
    fast path, where no dependence fit is run.
    """

    theta: float
    interest: str
    g_kind: str
    names: tuple
    columns: dict
    dependence: dict | None
    remainder: dict | None

    def matrix(self) -> np.ndarray | None:
        """Reconstructed nuisance columns as an (n, d) array, None at d=0."""
        if not self.names:
            return None
        return np.column_stack([self.columns[name] for name in self.names])


def reconstruct_nuisance(data: SpatialDataset, interest: str, theta: float = 1.0,
                         g_kind: str | None = None,
                         f_kind: str = "lm") -> ThetaReconstruction:
    """Rebuild every nuisance covariate at the requested theta.

    ``g_kind`` None picks the default for ``f_kind``. theta = 1 skips the
    dependence fits and returns the observed columns unchanged.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0, 1], got {theta}")
    if interest not in data.covariate_names:
        raise ValidationError(f"interest covariate {interest!r} not in dataset "
                              f"(have {', '.join(data.covariate_names)})")
    if g_kind is None:
        g_kind = default_g_kind(f_kind)
    names = tuple(n for n in data.covariate_names if n != interest)

    if theta == 1.0:
        columns = {n: data.covariates[n] for n in names}
        return ThetaReconstruction(theta=theta, interest=interest, g_kind=g_kind,
                                   names=names, columns=columns,
                                   dependence=None, remainder=None)

    z = data.covariates[interest]
    dependence, remainder, columns = {}, {}, {}
    for name in names:
        xj = data.covariates[name]
        g = _fit_g(z, xj, g_kind)
        delta = xj - g
        dependence[name] = g
        remainder[name] = delta
        columns[name] = theta * g + delta
    return ThetaReconstruction(theta=theta, interest=interest, g_kind=g_kind,
                               names=names, columns=columns,
                               dependence=dependence, remainder=remainder)


def fit_mean_model(locations, X, y, kind: str, lm_family: str = "squared_exponential",
                   lm_shape: float = 1.0, nw_bandwidth=None,
                   gam_lambda_grid=None) -> FittedModel:
    """Dispatch to one trend fitter. X may be None for an intercept-only fit."""
    if kind not in FITTER_KINDS:
        raise ValidationError(f"unknown fitter kind {kind!r}; expected one of {FITTER_KINDS}")
    y = np.asarray(y, dtype=float)
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] == 0:
            X = None
    if X is None:
        # intercept-only trend, identical for every kind
        mean = float(np.mean(y))
        fitted = np.full(y.shape[0], mean)

        def intercept_predictor(covariates=None, locations=None):
            m = 1 if locations is None else np.shape(locations)[0]
            return np.full(m, mean)

        return FittedModel(kind=kind, fitted=fitted, residuals=y - fitted,
                           coefficients=np.array([mean]),
                           coefficient_names=["intercept"],
                           predictor=intercept_predictor)
    if kind == "lm":
        return fit_lm_ml(locations, X, y, family=lm_family, shape=lm_shape)
    if kind == "gls":
        return fit_gls_variogram(locations, X, y, family=lm_family, shape=lm_shape)
    if kind == "nw":
        return fit_nw(X, y, bandwidth=nw_bandwidth)
    return fit_gam(locations, X, y, nonlinear=(kind == "gam_nl"),
                   lambda_grid=gam_lambda_grid)


def residualize(data: SpatialDataset, nuisance: ThetaReconstruction | None,
                f_kind: str = "lm", **fitter_options) -> np.ndarray:
    """Residuals of the response on the reconstructed nuisance covariates.

    The interest covariate never enters the fit. With zero nuisance
    covariates every kind reduces to the intercept-only fit y - mean(y).
    """
    X = None if nuisance is None else nuisance.matrix()
    model = fit_mean_model(data.locations, X, data.response, f_kind, **fitter_options)
    return model.residuals
