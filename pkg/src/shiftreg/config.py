"""Flat key-value run configuration.

A config file holds one `key = value` pair per line; blank lines and lines
starting with # are skipped. Values are parsed as JSON when they parse
(numbers, true/false/null, [lists]); anything else is taken as a bare
string, so `fitter = gam_l` and `fitter = "gam_l"` agree. Keys use dotted
namespaces (`gam.lambda_grid`). Unknown keys are errors: a typo should
fail loudly, not silently run defaults.

CLI flags override file keys; the merged mapping is echoed into every
output JSON so a run can be reproduced from its own report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError
from .fields import DESIGNS, SCENARIOS, TRENDS

_FITTERS = ("lm", "gls", "nw", "gam_l", "gam_nl")
_G_FITTERS = ("lm", "nw", "smooth")
_STATISTICS = ("cov", "dcov", "kendall")
_CORRECTIONS = ("torus", "variance")
_TAILS = ("two", "upper", "lower")
_SHIFT_MODES = ("uniform", "fixed_grid")
_FAMILIES = ("squared_exponential", "exponential", "stable", "matern", "gen_cauchy")


@dataclass(frozen=True)
class KeySpec:
    kind: str                 # str | int | float | bool | list | number_or_list
    description: str
    choices: tuple | None = None
    nullable: bool = False


# the full registry; every key other modules declare, plus documented extras
KEY_REGISTRY = {
    # dataset
    "data": KeySpec("str", "path to the input CSV"),
    "response": KeySpec("str", "response column name (default yresp)"),
    "window": KeySpec("list", "observation window [x_min, x_max, y_min, y_max]; "
                              "default is the tight bounding box of the points",
                      nullable=True),
    "standardize": KeySpec("bool", "z-score every used column before testing"),
    # test pipeline
    "interest": KeySpec("str", "covariate of interest"),
    "fitter": KeySpec("str", "mean-trend fitter", choices=_FITTERS),
    "g_fitter": KeySpec("str", "dependence fitter for the theta reconstruction; "
                               "default derived from fitter",
                        choices=_G_FITTERS, nullable=True),
    "theta": KeySpec("float", "reconstruction weight in [0, 1]; 1 keeps covariates raw"),
    "statistic": KeySpec("str", "dependence statistic", choices=_STATISTICS),
    "correction": KeySpec("str", "window correction", choices=_CORRECTIONS),
    "K": KeySpec("int", "number of random shifts (at least 19)"),
    "tail": KeySpec("str", "extremeness rule; default two-sided for signed "
                           "statistics, upper for dcov",
                    choices=_TAILS, nullable=True),
    "shift_mode": KeySpec("str", "how shift vectors arise", choices=_SHIFT_MODES),
    "shift_separation": KeySpec("float", "minimum pairwise/origin distance for "
                                         "fixed_grid shift vectors", nullable=True),
    "r_max": KeySpec("float", "max shift per axis for the variance correction; "
                              "default half the shorter window side", nullable=True),
    "min_retained": KeySpec("int", "minimum retained points per variance replicate"),
    "seed": KeySpec("int", "master seed; all randomness derives from it"),
    "alpha": KeySpec("float", "significance level"),
    "dcov.center": KeySpec("bool", "center scaled dcov values and rank two-sided "
                                   "instead of the default uncentered upper tail"),
    "max_parallel_dcov": KeySpec("int", "cap on concurrent dcov evaluations; "
                                        "accepted for compatibility, evaluations "
                                        "run sequentially here", nullable=True),
    # fitter hyperparameters
    "gam.lambda_grid": KeySpec("list", "smoothing-parameter grid for the GAM "
                                       "fitters", nullable=True),
    "nw.bandwidth": KeySpec("number_or_list", "fixed kernel bandwidth(s); "
                                              "default leave-one-out CV",
                            nullable=True),
    "lm.family": KeySpec("str", "covariance family for the lm/gls fitters",
                         choices=_FAMILIES),
    "lm.shape": KeySpec("float", "shape exponent for the stable family"),
    # simulation
    "design": KeySpec("str", "covariate design", choices=DESIGNS),
    "trend": KeySpec("str", "mean trend", choices=TRENDS),
    "scenario": KeySpec("str", "error-field scenario", choices=SCENARIOS),
    "scenario.variance": KeySpec("float", "override the scenario's error variance",
                                 nullable=True),
    "n": KeySpec("int", "number of observations"),
    "effect": KeySpec("float", "effect size of the tested covariate under the "
                               "alternative; 0 is the null"),
    "dependence_scale": KeySpec("float", "strength of the x4-on-x1 dependence in "
                                         "the dependent designs"),
    # study harness
    "R": KeySpec("int", "study replications per cell"),
    "workers": KeySpec("int", "worker processes; default one per CPU",
                       nullable=True),
    "preset": KeySpec("str", "named study preset", nullable=True),
    "study.designs": KeySpec("list", "design grid for a custom study", nullable=True),
    "study.trends": KeySpec("list", "trend grid", nullable=True),
    "study.scenarios": KeySpec("list", "scenario grid", nullable=True),
    "study.methods": KeySpec("list", "method tuples [fitter, statistic, "
                                     "correction, theta]", nullable=True),
    "study.label": KeySpec("str", "free-form label echoed in reports",
                           nullable=True),
}

DEFAULTS = {
    "response": "yresp",
    "standardize": False,
    "fitter": "lm",
    "g_fitter": None,
    "theta": 1.0,
    "statistic": "cov",
    "correction": "variance",
    "K": 199,
    "tail": None,
    "shift_mode": "uniform",
    "shift_separation": None,
    "r_max": None,
    "min_retained": 10,
    "seed": 0,
    "alpha": 0.05,
    "dcov.center": False,
    "max_parallel_dcov": None,
    "gam.lambda_grid": None,
    "nw.bandwidth": None,
    "lm.family": "squared_exponential",
    "lm.shape": 1.0,
    "design": "single_nuisance",
    "trend": "linear",
    "scenario": "SE1",
    "scenario.variance": None,
    "n": 100,
    "effect": 0.0,
    "dependence_scale": 1.0,
    "R": 500,
    "workers": None,
    "preset": None,
    "window": None,
}


def parse_value(text: str):
    """JSON when it parses, bare string otherwise."""
    text = text.strip()
    try:
        return json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return text


def coerce(key: str, value):
    """Check a raw value against the registry entry for ``key``."""
    try:
        spec = KEY_REGISTRY[key]
    except KeyError:
        known = ", ".join(sorted(KEY_REGISTRY))
        raise ConfigError(f"unknown config key {key!r}; known keys: {known}") from None
    if value is None:
        if spec.nullable:
            return None
        raise ConfigError(f"config key {key!r} cannot be null")
    kind = spec.kind
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} expects a string, got {value!r}")
    elif kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key!r} expects an integer, got {value!r}")
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} expects a number, got {value!r}")
        value = float(value)
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key!r} expects true or false, got {value!r}")
    elif kind == "list":
        if not isinstance(value, list):
            raise ConfigError(f"config key {key!r} expects a list, got {value!r}")
    elif kind == "number_or_list":
        if isinstance(value, bool) or not isinstance(value, (int, float, list)):
            raise ConfigError(f"config key {key!r} expects a number or list, got {value!r}")
        if isinstance(value, (int, float)):
            value = float(value)
    if spec.choices is not None and value is not None and value not in spec.choices:
        raise ConfigError(f"config key {key!r} must be one of "
                          f"{', '.join(spec.choices)}; got {value!r}")
    return value


def read_config_file(path: str) -> dict:
    """Parse and validate a config file into a {key: value} mapping."""
    out = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got {stripped!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            out[key] = coerce(key, parse_value(raw))
    return out


def merge_config(file_config: dict | None, overrides: dict) -> dict:
    """Defaults, then file keys, then CLI overrides (None = not given)."""
    merged = dict(DEFAULTS)
    for key, value in (file_config or {}).items():
        merged[key] = value
    for key, value in overrides.items():
        if value is not None:
            merged[key] = coerce(key, value)
    return merged
