"""Random-shift Monte Carlo significance tests for spatial regression.

Shifting one covariate's sampling locations by a random vector breaks its
relationship to the response while preserving its spatial structure; doing
that K times and ranking a dependence statistic between the shifted
covariate and the regression residuals gives an exact-level Monte Carlo
test without any model for the residual field. A torus correction wraps
shifted locations back into the window; a variance correction restricts
each replicate to the overlap of the window with its shifted copy and
rescales the statistics for the lost observations.

Main entry points: the one-covariate test `shift_test`, the elimination
loop `backward_select`, the simulation harness `run_study`, and the
`shiftreg` command-line tool (see cli.main).
"""

from .dataset import SpatialDataset, bounding_window, read_csv, write_csv
from .engine import (CORRECTIONS, SHIFT_MODES, TAILS, ShiftPlan,
                     ShiftTestResult, run_shift_test, run_torus_test,
                     run_variance_test)
from .errors import (ConfigError, DegenerateAux, EmptyIntersection,
                     InfeasibleSeparation, InsufficientPairs, NoPairs,
                     NumericalError, SchemaError, ShiftExhausted,
                     ShiftregError, SingularSystem, ValidationError)
from .fields import (DESIGNS, SCENARIOS, TRENDS, design_covariates,
                     generate_design, scenario_field, scenario_kernel,
                     substream)
from .geometry import (UNIT_SQUARE, GridInfo, Pairing, Window, detect_grid,
                       fixed_grid_shifts, grid_overlap_pairing,
                       grid_torus_pairing, intersect_window, nearest_pairing,
                       snap_shift_to_grid, torus_wrap)
from .harness import (PRESETS, CellResult, MethodSpec, StudyReport, StudySpec,
                      binomial_band, power_study, run_study)
from .kernels import (DEFAULT_NS, FAMILIES, Kernel, NonstationaryConfig,
                      kernel_matrix, ns_kernel_matrix, ns_local_parameters)
from .regression import (FITTER_KINDS, FittedModel, ThetaReconstruction,
                         classical_t_test, fit_gam, fit_gls_variogram,
                         fit_lm_ml, fit_mean_model, fit_nw,
                         reconstruct_nuisance, residualize)
from .selection import (SelectionRound, SelectionTrace, backward_select,
                        shift_test)
from .statistics import (KINDS, StatValue, backend_name, distance_covariance,
                         evaluate, kendall, rank_p_value, sample_covariance,
                         standardize)
from .svg import render_study_svg

__version__ = "0.1.0"

__all__ = [
    "CORRECTIONS", "DEFAULT_NS", "DESIGNS", "FAMILIES", "FITTER_KINDS",
    "KINDS", "PRESETS", "SCENARIOS", "SHIFT_MODES", "TAILS", "TRENDS",
    "UNIT_SQUARE", "CellResult", "ConfigError", "DegenerateAux",
    "EmptyIntersection", "FittedModel", "GridInfo", "InfeasibleSeparation",
    "InsufficientPairs", "Kernel", "MethodSpec", "NoPairs",
    "NonstationaryConfig", "NumericalError", "Pairing", "SchemaError",
    "SelectionRound", "SelectionTrace", "ShiftExhausted", "ShiftPlan",
    "ShiftTestResult", "ShiftregError", "SingularSystem", "SpatialDataset",
    "StatValue", "StudyReport", "StudySpec", "ThetaReconstruction",
    "ValidationError", "Window", "backend_name", "backward_select",
    "binomial_band", "bounding_window", "classical_t_test",
    "design_covariates", "detect_grid", "distance_covariance", "evaluate",
    "fit_gam", "fit_gls_variogram", "fit_lm_ml", "fit_mean_model", "fit_nw",
    "fixed_grid_shifts", "generate_design", "grid_overlap_pairing",
    "grid_torus_pairing", "intersect_window", "kendall", "kernel_matrix",
    "nearest_pairing", "ns_kernel_matrix", "ns_local_parameters",
    "power_study", "rank_p_value", "read_csv", "reconstruct_nuisance",
    "render_study_svg", "residualize", "run_shift_test", "run_study",
    "run_torus_test", "run_variance_test", "sample_covariance",
    "scenario_field", "scenario_kernel", "shift_test",
    "snap_shift_to_grid", "standardize", "substream", "torus_wrap",
    "write_csv", "__version__",
]
