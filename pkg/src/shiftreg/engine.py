"""The random-shift Monte Carlo engine.

Given residuals e at the data locations and the covariate of interest x,
the engine shifts the covariate's locations K times, re-pairs shifted
covariate values with residuals, and ranks the observed statistic among the
replicate statistics. Two window corrections deal with the shifted points
that leave the window:

torus       wrap the shifted locations back into the window. Every
            replicate keeps all n observations, so raw statistics are
            ranked directly with no standardization step.

variance    drop what falls outside. Each replicate restricts residuals to
            the overlap W_k of the window with its shifted copy and pairs
            them with the covariate points whose shifted locations lie in
            W_k; replicates then live on different sample sizes n_k and are
            put on one scale by statistics.standardize before ranking.

On lattice data the engine recognizes shifts that are whole grid steps and
swaps the nearest-neighbor search for exact index arithmetic, so pairing
distances are exactly zero. For the torus this additionally requires the
lattice period to match the window side (a half-open grid); otherwise the
wrapped points fall between sites and the generic pairing handles them.

Randomness: replicate k draws from its own substream (master_seed, k), so
results do not depend on evaluation order. Shift vectors that retain too
few points are redrawn from the same substream, at most 100 times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import SpatialDataset
from .errors import (EmptyIntersection, NoPairs, ShiftExhausted,
                     ValidationError)
from .fields import substream
from .geometry import (Window, detect_grid, fixed_grid_shifts,
                       grid_overlap_pairing, grid_torus_pairing,
                       intersect_window, nearest_pairing, snap_shift_to_grid,
                       torus_wrap)
from .statistics import KINDS, evaluate, rank_p_value, standardize

CORRECTIONS = ("torus", "variance")
SHIFT_MODES = ("uniform", "fixed_grid")
TAILS = ("two", "upper", "lower")

MAX_REDRAWS = 100
_SNAP_RTOL = 1e-9


@dataclass(frozen=True)
class ShiftPlan:
    """Everything the engine needs to know besides the data.

    ``r_max`` (variance correction) defaults to half the shorter window
    side when left None. ``tail`` None resolves to two-sided for the signed
    statistics and upper for distance covariance. ``separation`` is the
    minimum pairwise/origin distance for fixed_grid shift vectors and is
    required in that mode. ``dcov_center`` re-centers the scaled distance
    covariance values at their mean and ranks them two-sided, instead of
    the default uncentered one-sided ranking.
    """

    correction: str = "variance"
    statistic: str = "cov"
    K: int = 199
    master_seed: int | tuple = 0
    tail: str | None = None
    shift_mode: str = "uniform"
    separation: float | None = None
    r_max: float | None = None
    min_retained: int = 10
    dcov_center: bool = False

    def __post_init__(self):
        if self.correction not in CORRECTIONS:
            raise ValidationError(f"unknown correction {self.correction!r}; "
                                  f"expected one of {CORRECTIONS}")
        if self.statistic not in KINDS:
            raise ValidationError(f"unknown statistic {self.statistic!r}; "
                                  f"expected one of {KINDS}")
        if self.K < 19:
            raise ValidationError(f"K must be at least 19, got {self.K}")
        if self.shift_mode not in SHIFT_MODES:
            raise ValidationError(f"unknown shift_mode {self.shift_mode!r}")
        if self.shift_mode == "fixed_grid" and self.separation is None:
            raise ValidationError("fixed_grid shifts need an explicit separation")
        if self.tail is not None and self.tail not in TAILS:
            raise ValidationError(f"unknown tail {self.tail!r}; expected one of {TAILS}")
        if self.min_retained < 4:
            raise ValidationError(f"min_retained must be at least 4, got {self.min_retained}")

    def resolved_tail(self) -> str:
        if self.tail is not None:
            return self.tail
        if self.statistic == "dcov" and not self.dcov_center:
            return "upper"
        return "two"

    def resolved_r_max(self, window: Window) -> float:
        r = 0.5 * min(window.width, window.height) if self.r_max is None else self.r_max
        if not 0.0 < r < min(window.width, window.height):
            raise ValidationError(f"r_max must lie in (0, shorter window side), got {r}")
        return r


def _json_floats(values) -> list:
    """Floats for JSON output; non-finite entries become None."""
    return [float(v) if math.isfinite(v) else None for v in values]


@dataclass
class ShiftTestResult:
    """Outcome of one shift test, reproducible from its provenance block.

    Replicate arrays have length K in replicate order; slots belonging to
    dropped replicates hold NaN (raw/standardized) and 0 (n_k).
    """

    statistic: str
    correction: str
    tail: str
    p_value: float
    observed_raw: float
    observed_standardized: float
    n: int
    replicate_raw: np.ndarray
    replicate_standardized: np.ndarray
    replicate_n: np.ndarray
    shifts: np.ndarray
    redraws: np.ndarray
    dropped_replicates: int
    dropped_reasons: list = field(default_factory=list)
    degenerate_observed: bool = False
    note: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def k_effective(self) -> int:
        return int(self.replicate_raw.shape[0]) - self.dropped_replicates

    def to_dict(self) -> dict:
        """JSON-ready view; arrays become lists, keys are stable."""
        return {
            "statistic": self.statistic,
            "correction": self.correction,
            "tail": self.tail,
            "p_value": self.p_value,
            "observed": {
                "raw": self.observed_raw,
                "standardized": self.observed_standardized,
                "n": self.n,
            },
            "replicates": {
                "raw": _json_floats(self.replicate_raw),
                "standardized": _json_floats(self.replicate_standardized),
                "n_k": [int(v) for v in self.replicate_n],
                "shifts": [[float(a), float(b)] for a, b in self.shifts],
                "redraws": [int(v) for v in self.redraws],
            },
            "k": int(self.replicate_raw.shape[0]),
            "k_effective": self.k_effective,
            "dropped_replicates": self.dropped_replicates,
            "dropped_reasons": list(self.dropped_reasons),
            "degenerate_observed": self.degenerate_observed,
            "note": self.note,
            "provenance": self.provenance,
        }


def _provenance(plan: ShiftPlan, window: Window, extra: dict | None) -> dict:
    seed = plan.master_seed
    out = {
        "correction": plan.correction,
        "statistic": plan.statistic,
        "k": plan.K,
        "seed": list(seed) if isinstance(seed, (tuple, list)) else seed,
        "tail": plan.resolved_tail(),
        "shift_mode": plan.shift_mode,
        "dcov_center": plan.dcov_center,
    }
    if plan.correction == "variance":
        out["r_max"] = plan.resolved_r_max(window)
        out["min_retained"] = plan.min_retained
    if plan.shift_mode == "fixed_grid":
        out["separation"] = plan.separation
    if extra:
        out.update(extra)
    return out


def _check_inputs(data: SpatialDataset, residuals, interest: str):
    if interest not in data.covariate_names:
        raise ValidationError(f"interest covariate {interest!r} not in dataset")
    e = np.asarray(residuals, dtype=float)
    if e.shape != (data.n,):
        raise ValidationError(f"residuals must have shape ({data.n},), got {e.shape}")
    return e, data.covariates[interest]


def _fixed_shift_table(plan: ShiftPlan, window: Window) -> np.ndarray | None:
    if plan.shift_mode != "fixed_grid":
        return None
    r_max = plan.resolved_r_max(window) if plan.correction == "variance" else None
    return fixed_grid_shifts(window, plan.K, plan.separation, r_max)


def _snap(grid, shift):
    """Whole-step lattice version of a shift, or None if it is not one."""
    if grid is None:
        return None
    steps = snap_shift_to_grid(shift, grid)
    tol_x = _SNAP_RTOL * max(abs(shift[0]), grid.dx)
    tol_y = _SNAP_RTOL * max(abs(shift[1]), grid.dy)
    if (abs(steps[0] * grid.dx - shift[0]) <= tol_x
            and abs(steps[1] * grid.dy - shift[1]) <= tol_y):
        return steps
    return None


def _torus_grid(locs, window: Window):
    """Grid info only when index arithmetic agrees with toroidal wrapping,
    i.e. the lattice period equals the window side on both axes."""
    grid = detect_grid(locs)
    if grid is None:
        return None
    if (abs(grid.nx * grid.dx - window.width) <= _SNAP_RTOL * window.width
            and abs(grid.ny * grid.dy - window.height) <= _SNAP_RTOL * window.height):
        return grid
    return None


def run_torus_test(data: SpatialDataset, residuals, interest: str,
                   plan: ShiftPlan, provenance: dict | None = None) -> ShiftTestResult:
    """Shift test with toroidal wrapping; every replicate keeps all n points.

    Replicates are ranked on raw statistic values: wrapping preserves the
    sample size, so the variance-stabilizing rescale is a no-op for the
    ranking and is skipped.
    """
    if plan.correction != "torus":
        raise ValidationError("plan.correction must be 'torus' here")
    e, x = _check_inputs(data, residuals, interest)
    window, locs, n = data.window, data.locations, data.n
    tail = plan.resolved_tail()

    observed = evaluate(plan.statistic, x, e)
    grid = _torus_grid(locs, window)
    fixed = _fixed_shift_table(plan, window)

    shifts = np.empty((plan.K, 2))
    raw = np.empty(plan.K)
    valid = np.ones(plan.K, dtype=bool)
    reasons: list[str] = []
    pairing_mode = "nearest"

    for k in range(1, plan.K + 1):
        if fixed is not None:
            v = np.asarray(fixed[k - 1], dtype=float)
        else:
            rng = substream(plan.master_seed, k)
            v = np.array([rng.uniform(0.0, window.width),
                          rng.uniform(0.0, window.height)])
        if v[0] == 0.0 and v[1] == 0.0:
            raise ValidationError(f"replicate {k}: torus shift must be nonzero")
        shifts[k - 1] = v

        steps = _snap(grid, v)
        if steps is not None:
            pairing = grid_torus_pairing(grid, steps)
            pairing_mode = "grid-exact"
        else:
            wrapped = torus_wrap(locs, v, window)
            pairing = nearest_pairing(locs, wrapped)
        stat_k = evaluate(plan.statistic, x[pairing.source_index],
                          e[pairing.target_index])
        raw[k - 1] = stat_k.raw
        if stat_k.degenerate:
            valid[k - 1] = False
            reasons.append(f"replicate {k}: degenerate distance means")

    prov = _provenance(plan, window, provenance)
    prov["pairing"] = pairing_mode
    common = dict(
        statistic=plan.statistic, correction="torus", tail=tail,
        observed_raw=observed.raw, observed_standardized=observed.raw,
        n=n, replicate_raw=raw, replicate_standardized=raw.copy(),
        replicate_n=np.full(plan.K, n, dtype=int), shifts=shifts,
        redraws=np.zeros(plan.K, dtype=int),
        dropped_replicates=int((~valid).sum()), dropped_reasons=reasons,
        provenance=prov,
    )

    if plan.statistic == "dcov" and observed.degenerate:
        return ShiftTestResult(
            p_value=1.0, degenerate_observed=True,
            note="observed distance covariance degenerate (constant field); p set to 1",
            **common,
        )

    obs_val = float(observed.raw)
    rep_vals = raw[valid]
    note = "torus replicates keep all n points; raw statistics ranked directly"
    if plan.statistic == "dcov" and plan.dcov_center:
        center = float(np.mean(np.concatenate([[obs_val], rep_vals])))
        obs_val -= center
        rep_vals = rep_vals - center
        note += "; dcov values centered at their mean before ranking"
    common["note"] = note
    return ShiftTestResult(p_value=rank_p_value(obs_val, rep_vals, tail), **common)


def _variance_replicate(locs, window, grid, v):
    """Global target/source index arrays for one variance-correction shift.

    Raises NoPairs when the overlap holds no usable points.
    """
    steps = _snap(grid, v)
    if steps is not None:
        pairing = grid_overlap_pairing(grid, steps)
        return pairing.target_index, pairing.source_index, "grid-exact"
    try:
        overlap = intersect_window(window, v)
    except EmptyIntersection as exc:
        raise NoPairs(str(exc)) from exc
    target_mask = overlap.contains(locs)
    shifted = locs + np.asarray(v, dtype=float)
    source_mask = overlap.contains(shifted)
    if not target_mask.any() or not source_mask.any():
        raise NoPairs("overlap contains no usable points")
    pairing = nearest_pairing(locs[target_mask], shifted[source_mask])
    t_idx = np.flatnonzero(target_mask)[pairing.target_index]
    s_idx = np.flatnonzero(source_mask)[pairing.source_index]
    return t_idx, s_idx, "nearest"


def run_variance_test(data: SpatialDataset, residuals, interest: str,
                      plan: ShiftPlan, provenance: dict | None = None) -> ShiftTestResult:
    """Shift test that discards points leaving the window.

    Each replicate k restricts to the overlap of the window with its copy
    shifted by v_k, pairs surviving residual points with the covariate
    points whose shifted locations land in the overlap, and records the
    retained count n_k. All K+1 statistics are then standardized to a
    common scale and the observed one is ranked among the replicates.

    In fixed_grid mode a vector that retains fewer than min_retained points
    cannot be redrawn; its replicate is dropped and counted instead.
    """
    if plan.correction != "variance":
        raise ValidationError("plan.correction must be 'variance' here")
    e, x = _check_inputs(data, residuals, interest)
    window, locs, n = data.window, data.locations, data.n
    tail = plan.resolved_tail()
    r_max = plan.resolved_r_max(window)
    if plan.min_retained > n:
        raise ValidationError(f"min_retained={plan.min_retained} exceeds n={n}")

    observed = evaluate(plan.statistic, x, e)
    grid = detect_grid(locs)
    fixed = _fixed_shift_table(plan, window)

    # stats[0] is the observed statistic; None marks a dropped replicate
    stats = [observed]
    n_list = [n]
    shifts = np.empty((plan.K, 2))
    redraws = np.zeros(plan.K, dtype=int)
    reasons: list[str] = []
    pairing_mode = "nearest"

    for k in range(1, plan.K + 1):
        if fixed is not None:
            v = np.asarray(fixed[k - 1], dtype=float)
            shifts[k - 1] = v
            try:
                t_idx, s_idx, pairing_mode = _variance_replicate(locs, window, grid, v)
                if t_idx.shape[0] < plan.min_retained:
                    raise NoPairs(f"retained {t_idx.shape[0]} points, "
                                  f"need {plan.min_retained}")
            except NoPairs as exc:
                reasons.append(f"replicate {k}: fixed shift unusable ({exc})")
                stats.append(None)
                n_list.append(0)
                continue
        else:
            rng = substream(plan.master_seed, k)
            attempt = 0
            while True:
                v = rng.uniform(-r_max, r_max, size=2)
                try:
                    t_idx, s_idx, pairing_mode = _variance_replicate(locs, window, grid, v)
                    retained = t_idx.shape[0]
                except NoPairs:
                    retained = 0
                if retained >= plan.min_retained:
                    break
                attempt += 1
                if attempt > MAX_REDRAWS:
                    raise ShiftExhausted(
                        f"replicate {k}: no shift retained at least "
                        f"{plan.min_retained} points after {MAX_REDRAWS} redraws")
            redraws[k - 1] = attempt
            shifts[k - 1] = v
        stats.append(evaluate(plan.statistic, x[s_idx], e[t_idx]))
        n_list.append(int(t_idx.shape[0]))

    # standardize over the usable entries only, then scatter back
    usable = np.array([s is not None for s in stats])
    usable_idx = np.flatnonzero(usable)
    std = standardize(plan.statistic,
                      [stats[i] for i in usable_idx],
                      [n_list[i] for i in usable_idx],
                      center="mean")
    k_plus_1 = plan.K + 1
    values = np.full(k_plus_1, np.nan)
    values[usable_idx] = std.values
    valid = np.zeros(k_plus_1, dtype=bool)
    valid[usable_idx] = std.valid
    raw_all = np.array([np.nan if s is None else s.raw for s in stats])
    for local_i, global_i in enumerate(usable_idx):
        if global_i >= 1 and not std.valid[local_i]:
            reasons.append(f"replicate {global_i}: degenerate distance means")

    prov = _provenance(plan, window, provenance)
    prov["pairing"] = pairing_mode
    common = dict(
        statistic=plan.statistic, correction="variance", tail=tail,
        observed_raw=float(raw_all[0]), n=n,
        replicate_raw=raw_all[1:],
        replicate_n=np.asarray(n_list[1:], dtype=int),
        shifts=shifts, redraws=redraws,
        dropped_replicates=int((~valid[1:]).sum()),
        dropped_reasons=reasons, provenance=prov,
    )

    if plan.statistic == "dcov" and not valid[0]:
        return ShiftTestResult(
            p_value=1.0, observed_standardized=0.0,
            replicate_standardized=values[1:],
            degenerate_observed=True,
            note="observed distance covariance degenerate (constant field); p set to 1",
            **common,
        )

    obs_val = float(values[0])
    rep_valid = values[1:][valid[1:]]
    note = std.note
    if plan.statistic == "dcov" and plan.dcov_center:
        center = float(np.mean(np.concatenate([[obs_val], rep_valid])))
        obs_val -= center
        rep_valid = rep_valid - center
        values = values - center
        note += "; centered at the mean before ranking"
    return ShiftTestResult(
        p_value=rank_p_value(obs_val, rep_valid, tail),
        observed_standardized=float(values[0]),
        replicate_standardized=values[1:],
        note=note, **common,
    )


def run_shift_test(data: SpatialDataset, residuals, interest: str,
                   plan: ShiftPlan, provenance: dict | None = None) -> ShiftTestResult:
    """Dispatch on plan.correction."""
    if plan.correction == "torus":
        return run_torus_test(data, residuals, interest, plan, provenance)
    return run_variance_test(data, residuals, interest, plan, provenance)
