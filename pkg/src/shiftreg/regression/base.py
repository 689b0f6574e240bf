"""Common result type for every mean-trend fitter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FITTER_KINDS = ("lm", "gls", "nw", "gam_l", "gam_nl")


@dataclass
class FittedModel:
    """A fitted mean trend with residuals and an optional predictor.

    ``kind`` names the fitter that produced the model. Coefficient-level
    fields are populated by the linear routes and left None by the
    nonparametric ones. ``warnings`` collects non-fatal events such as the
    variogram fit falling back to ordinary least squares.
    """

    kind: str
    fitted: np.ndarray
    residuals: np.ndarray
    coefficients: np.ndarray | None = None
    coefficient_names: list[str] | None = None
    stderr: np.ndarray | None = None
    tvalues: np.ndarray | None = None
    pvalues: np.ndarray | None = None
    dof: int | None = None
    hyperparameters: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    predictor: Callable | None = None

    def predict(self, covariates=None, locations=None) -> np.ndarray:
        """Mean-trend prediction at new covariate values (and locations,
        for kinds with a spatial smooth)."""
        if self.predictor is None:
            raise NotImplementedError(f"{self.kind} model has no predictor")
        return self.predictor(covariates, locations)
