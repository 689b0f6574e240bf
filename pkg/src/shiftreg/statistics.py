"""Dependence statistics between a residual field and a covariate field.

Three statistics are supported, chosen by a short kind tag:

    cov       bias-corrected sample covariance (signed)
    dcov      squared distance covariance (nonnegative, one-sided)
    kendall   Kendall rank statistic without tie correction (signed)

`evaluate` returns the raw value plus, for dcov, the two grand-mean pairwise
distances needed later for standardization. `standardize` converts a batch
of raw values from windows of different sizes onto a comparable scale: the
signed statistics have variance falling off like 1/n_k, so they are centered
(at the supplied center, normally the mean over observed plus shifted
values) and scaled by sqrt(n_k); dcov is scaled by n_k over the product of
grand-mean distances and never centered. Replicates whose grand-mean
distance is zero (a constant field) cannot be standardized and are flagged
degenerate.

The heavy kernels live in `shiftreg._fast`, compiled when available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fast import BACKEND, dcov_terms, kendall_tau as _kendall_fast
from .errors import InsufficientPairs

KINDS = ("cov", "dcov", "kendall")
SIGNED_KINDS = ("cov", "kendall")


def backend_name() -> str:
    """Which statistic kernel backend is active: 'compiled' or 'python'."""
    return BACKEND


@dataclass(frozen=True)
class StatValue:
    """Raw statistic plus the auxiliary quantities standardization needs."""

    kind: str
    raw: float
    aux: tuple[float, float] | None = None  # dcov: grand-mean distances (e, x)

    @property
    def degenerate(self) -> bool:
        """True when the dcov normalizer would divide by zero."""
        return self.aux is not None and (self.aux[0] == 0.0 or self.aux[1] == 0.0)


def sample_covariance(x, e) -> float:
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    if x.shape[0] < 2:
        raise InsufficientPairs("sample covariance needs at least 2 observations")
    return float((x - x.mean()) @ (e - e.mean()) / (x.shape[0] - 1))


def distance_covariance(x, e) -> StatValue:
    x = np.ascontiguousarray(x, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if x.shape[0] < 4:
        raise InsufficientPairs("distance covariance needs at least 4 observations")
    dcov2, dbar_e, dbar_x = dcov_terms(e, x)
    return StatValue(kind="dcov", raw=float(dcov2), aux=(float(dbar_e), float(dbar_x)))


def kendall(x, e) -> float:
    x = np.ascontiguousarray(x, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if x.shape[0] < 2:
        raise InsufficientPairs("kendall needs at least 2 observations")
    return float(_kendall_fast(x, e))


def evaluate(kind: str, x, e) -> StatValue:
    if kind == "cov":
        return StatValue(kind="cov", raw=sample_covariance(x, e))
    if kind == "dcov":
        return distance_covariance(x, e)
    if kind == "kendall":
        return StatValue(kind="kendall", raw=kendall(x, e))
    raise ValueError(f"unknown statistic kind {kind!r}; choose from {KINDS}")


@dataclass(frozen=True)
class Standardization:
    """Standardized values for a batch of replicates.

    ``values[k]`` corresponds to input k; entries where ``valid`` is False
    were degenerate and must be dropped by the caller. ``note`` records what
    transformation was applied.
    """

    values: np.ndarray
    valid: np.ndarray
    center: float
    note: str


def standardize(kind: str, stats: list[StatValue], n_ks, center: str = "mean") -> Standardization:
    """Put replicate statistics from different window sizes on one scale.

    ``center='mean'`` centers signed statistics at the mean over all valid
    entries (observed value included); ``center='zero'`` skips centering,
    which is the right call when every replicate uses all n observations and
    only the ranking matters. dcov ignores ``center`` entirely.
    """
    raws = np.array([s.raw for s in stats], dtype=float)
    n_arr = np.asarray(n_ks, dtype=float)
    if raws.shape != n_arr.shape:
        raise ValueError("stats and n_ks length mismatch")

    if kind == "dcov":
        valid = np.array([not s.degenerate for s in stats])
        values = np.zeros_like(raws)
        if valid.any():
            aux = np.array([s.aux if s.aux else (np.nan, np.nan) for s in stats], dtype=float)
            values[valid] = n_arr[valid] * raws[valid] / (aux[valid, 0] * aux[valid, 1])
        return Standardization(values=values, valid=valid, center=0.0,
                               note="n_k * raw / (dbar_e * dbar_x), uncentered")

    if kind not in SIGNED_KINDS:
        raise ValueError(f"unknown statistic kind {kind!r}")
    valid = np.ones(raws.shape[0], dtype=bool)
    if center == "mean":
        c = float(raws.mean())
        note = "(raw - mean over all K+1 values) * sqrt(n_k)"
    elif center == "zero":
        c = 0.0
        note = "raw * sqrt(n_k), uncentered"
    else:
        raise ValueError(f"unknown center mode {center!r}")
    return Standardization(values=(raws - c) * np.sqrt(n_arr), valid=valid,
                           center=c, note=note)


def rank_p_value(observed: float, replicates: np.ndarray, tail: str) -> float:
    """Monte Carlo p-value with ties counted as extreme.

    (1 + #{replicates at least as extreme as the observed value}) over
    (K_eff + 1), where K_eff is the number of usable replicates.
    """
    reps = np.asarray(replicates, dtype=float)
    if tail == "two":
        extreme = int((np.abs(reps) >= abs(observed)).sum())
    elif tail == "upper":
        extreme = int((reps >= observed).sum())
    elif tail == "lower":
        extreme = int((reps <= observed).sum())
    else:
        raise ValueError(f"unknown tail {tail!r}; choose two, upper or lower")
    return (1 + extreme) / (reps.shape[0] + 1)
