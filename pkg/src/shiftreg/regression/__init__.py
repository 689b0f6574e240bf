"""Mean-model fitters used to residualize the response before testing."""

from .base import FITTER_KINDS, FittedModel
from .linear import classical_t_test, empirical_semivariogram, fit_gls_variogram, fit_lm_ml
from .nadaraya import epanechnikov, fit_nw, select_bandwidths
from .reconstruct import (G_KINDS, ThetaReconstruction, default_g_kind,
                          fit_mean_model, reconstruct_nuisance, residualize)
from .thinplate import fit_gam, fit_smooth_1d, radial_1d, radial_2d

__all__ = [
    "FITTER_KINDS",
    "FittedModel",
    "G_KINDS",
    "ThetaReconstruction",
    "classical_t_test",
    "default_g_kind",
    "empirical_semivariogram",
    "epanechnikov",
    "fit_gam",
    "fit_gls_variogram",
    "fit_lm_ml",
    "fit_mean_model",
    "fit_nw",
    "fit_smooth_1d",
    "radial_1d",
    "radial_2d",
    "reconstruct_nuisance",
    "residualize",
    "select_bandwidths",
]
