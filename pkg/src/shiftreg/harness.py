"""Rejection-rate simulation studies.

A study crosses error scenarios, designs, and trends with a list of test
methods, generates R datasets per grid cell, runs every method on each
dataset, and reports empirical rejection rates against a binomial band
around the nominal level. Methods on the same replicate share the dataset
(and, where fitter and theta agree, the residuals), which pairs the
comparison and removes one layer of Monte Carlo noise.

Random streams are keyed by (master_seed, grid_cell, replicate, purpose)
with purpose 0 for data generation and 1 for the shift engine, so results
are independent of worker count and scheduling. Replicate failures are
recorded per cell; a cell aborts only when more than 20% of its replicates
error out.

Wall times are reported in the CSV table and on stderr, never in JSON:
JSON reports must be byte-identical across reruns of the same seed.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import SpatialDataset
from .engine import ShiftPlan, run_shift_test
from .errors import ValidationError
from .fields import DESIGNS, SCENARIOS, TRENDS, generate_design, substream
from .geometry import UNIT_SQUARE, Window
from .regression import classical_t_test, reconstruct_nuisance, residualize
from .statistics import KINDS

METHOD_KINDS = ("shift", "classical")


@dataclass(frozen=True)
class MethodSpec:
    """One column of a study: either a shift test or the classical t-test.

    For kind "classical" the statistic/correction/theta fields are ignored;
    the baseline is the maximum-likelihood linear model with a parametric
    two-sided t-test on the interest coefficient.
    """

    kind: str = "shift"
    fitter: str = "gam_l"
    statistic: str = "cov"
    correction: str = "variance"
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValidationError(f"unknown method kind {self.kind!r}")
        if self.kind == "shift" and self.statistic not in KINDS:
            raise ValidationError(f"unknown statistic {self.statistic!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError(f"theta must lie in [0, 1], got {self.theta}")

    @property
    def label(self) -> str:
        if self.kind == "classical":
            return f"classical[{self.fitter}]"
        return (f"shift[{self.fitter}/{self.statistic}/{self.correction}"
                f"/theta={self.theta:g}]")


@dataclass(frozen=True)
class StudySpec:
    """Grid, methods, and sizes of one study."""

    designs: tuple = ("single_nuisance",)
    trends: tuple = ("linear",)
    scenarios: tuple = ("SE1",)
    methods: tuple = (MethodSpec(),)
    interest: str = "x2"
    R: int = 500
    K: int = 199
    n: int = 100
    alpha: float = 0.05
    master_seed: int = 0
    workers: int | None = None
    window: Window = UNIT_SQUARE
    effect: float = 0.0
    dependence_scale: float = 1.0
    scenario_variance: float | None = None
    min_retained: int = 10
    r_max: float | None = None
    tail: str | None = None
    label: str = ""

    def __post_init__(self):
        if self.R < 100:
            raise ValidationError(f"R must be at least 100, got {self.R}")
        if not self.methods:
            raise ValidationError("a study needs at least one method")
        for tag, pool, what in ((self.designs, DESIGNS, "design"),
                                (self.trends, TRENDS, "trend"),
                                (self.scenarios, SCENARIOS, "scenario")):
            for value in tag:
                if value not in pool:
                    raise ValidationError(f"unknown {what} {value!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def grid(self) -> list:
        return [(d, t, s) for d in self.designs for t in self.trends
                for s in self.scenarios]


def binomial_band(R: int, alpha: float, coverage: float = 0.95) -> tuple:
    """Central binomial band for the rejection rate at the nominal level.

    Exact binomial quantiles, converted to rates by decimal arithmetic and
    rounded half-up to 3 decimals. At R=2000, alpha=0.05 the lower count is
    81 and 81/2000 = 0.0405, which half-up rounding turns into 0.041; a
    normal approximation puts the lower edge at 0.0404 and would round to
    0.040 instead, so the exact construction is the one that matches the
    reference values.
    """
    from decimal import ROUND_HALF_UP, Decimal

    from scipy.stats import binom

    if R < 1:
        raise ValidationError(f"R must be positive, got {R}")
    tail = (1.0 - coverage) / 2.0
    lo_count = int(binom.ppf(tail, R, alpha))
    hi_count = int(binom.ppf(1.0 - tail, R, alpha))
    quantum = Decimal("0.001")
    lo = float((Decimal(lo_count) / Decimal(R)).quantize(quantum, rounding=ROUND_HALF_UP))
    hi = float((Decimal(hi_count) / Decimal(R)).quantize(quantum, rounding=ROUND_HALF_UP))
    return lo, hi


@dataclass
class CellResult:
    """Aggregated outcomes of one (design, trend, scenario, method) cell."""

    design: str
    trend: str
    scenario: str
    method: MethodSpec
    rejections: int = 0
    errors: int = 0
    completed: int = 0
    dropped_total: int = 0
    wall_time: float = 0.0
    error_samples: list = field(default_factory=list)
    aborted: bool = False

    @property
    def rate(self) -> float | None:
        if self.aborted or self.completed == 0:
            return None
        return self.rejections / self.completed

    @property
    def mc_se(self) -> float | None:
        r = self.rate
        if r is None:
            return None
        return float(np.sqrt(r * (1.0 - r) / self.completed))


@dataclass
class StudyReport:
    """Everything a study produced, ready for JSON and CSV emission."""

    spec: StudySpec
    kind: str
    band: tuple
    cells: list
    total_wall_time: float

    def to_dict(self) -> dict:
        """JSON view. Deliberately excludes wall times (not reproducible)."""
        spec_dict = asdict(self.spec)
        spec_dict["window"] = list(self.spec.window.as_tuple())
        return {
            "kind": self.kind,
            "label": self.spec.label,
            "band": {"lo": self.band[0], "hi": self.band[1], "coverage": 0.95},
            "alpha": self.spec.alpha,
            "r": self.spec.R,
            "k": self.spec.K,
            "n": self.spec.n,
            "seed": self.spec.master_seed,
            "scale": {
                "R": self.spec.R, "K": self.spec.K, "n": self.spec.n,
                "full_scale": {"R": 2000, "K": 499, "n": 100},
                "R_fraction": round(self.spec.R / 2000, 6),
                "K_fraction": round(self.spec.K / 499, 6),
            },
            "spec": spec_dict,
            "cells": [
                {
                    "design": c.design,
                    "trend": c.trend,
                    "scenario": c.scenario,
                    "method": c.method.label,
                    "fitter": c.method.fitter,
                    "statistic": c.method.statistic if c.method.kind == "shift" else "t",
                    "correction": c.method.correction if c.method.kind == "shift" else "parametric",
                    "theta": c.method.theta if c.method.kind == "shift" else None,
                    "rejections": c.rejections,
                    "completed": c.completed,
                    "errors": c.errors,
                    "rate": c.rate,
                    "mc_se": c.mc_se,
                    "dropped_replicates": c.dropped_total,
                    "aborted": c.aborted,
                    "error_samples": c.error_samples,
                }
                for c in self.cells
            ],
        }

    def csv_text(self) -> str:
        """CSV table, one row per cell; wall time lives here."""
        header = ("design,trend,scenario,method,fitter,statistic,correction,"
                  "theta,R,completed,rejections,errors,rate,mc_se,band_lo,"
                  "band_hi,dropped_replicates,aborted,wall_time_s")
        rows = [header]
        for c in self.cells:
            shift = c.method.kind == "shift"
            rate = "" if c.rate is None else repr(round(c.rate, 6))
            se = "" if c.mc_se is None else repr(round(c.mc_se, 6))
            rows.append(",".join([
                c.design, c.trend, c.scenario, c.method.label,
                c.method.fitter,
                c.method.statistic if shift else "t",
                c.method.correction if shift else "parametric",
                f"{c.method.theta:g}" if shift else "",
                str(self.spec.R), str(c.completed), str(c.rejections),
                str(c.errors), rate, se,
                repr(self.band[0]), repr(self.band[1]),
                str(c.dropped_total), str(c.aborted).lower(),
                f"{c.wall_time:.2f}",
            ]))
        return "\n".join(rows) + "\n"


def _replicate_outcomes(spec: StudySpec, g: int, r: int) -> list:
    """Run every method on replicate r of grid cell g.

    Returns one tuple (method_index, rejected, dropped, error, seconds)
    per method. Residuals are shared between shift methods that agree on
    fitter and theta.
    """
    design, trend, scenario = spec.grid[g]
    data_rng = substream(spec.master_seed, g, r, 0)
    data = generate_design(design, trend, spec.n, data_rng, window=spec.window,
                           scenario=scenario, scenario_variance=spec.scenario_variance,
                           effect=spec.effect, dependence_scale=spec.dependence_scale)
    engine_seed = (spec.master_seed, g, r, 1)
    residual_cache: dict = {}
    out = []
    for m_index, method in enumerate(spec.methods):
        start = time.perf_counter()
        try:
            if method.kind == "classical":
                X = data.covariate_matrix(data.covariate_names)
                j = data.covariate_names.index(spec.interest)
                report = classical_t_test(data.locations, X, data.response, j)
                rejected = report["p_value"] <= spec.alpha
                dropped = 0
            else:
                key = (method.fitter, method.theta)
                if key not in residual_cache:
                    recon = reconstruct_nuisance(data, spec.interest,
                                                 theta=method.theta,
                                                 f_kind=method.fitter)
                    residual_cache[key] = residualize(data, recon,
                                                      f_kind=method.fitter)
                plan = ShiftPlan(correction=method.correction,
                                 statistic=method.statistic, K=spec.K,
                                 master_seed=engine_seed, tail=spec.tail,
                                 r_max=spec.r_max,
                                 min_retained=spec.min_retained)
                result = run_shift_test(data, residual_cache[key],
                                        spec.interest, plan,
                                        {"fitter": method.fitter,
                                         "theta": method.theta})
                rejected = result.p_value <= spec.alpha
                dropped = result.dropped_replicates
            out.append((m_index, bool(rejected), dropped, None,
                        time.perf_counter() - start))
        except Exception as exc:  # noqa: BLE001 - per-replicate isolation
            out.append((m_index, False, 0, f"{type(exc).__name__}: {exc}",
                        time.perf_counter() - start))
    return out


def _replicate_task(args):
    return args[1], args[2], _replicate_outcomes(*args)


def run_study(spec: StudySpec, kind: str = "null", progress=None) -> StudyReport:
    """Execute the full grid; see the module docstring for the protocol.

    ``progress`` may be a callable taking (done, total) for status output.
    """
    grid = spec.grid
    cells = {(g, m): CellResult(design=grid[g][0], trend=grid[g][1],
                                scenario=grid[g][2], method=spec.methods[m])
             for g in range(len(grid)) for m in range(len(spec.methods))}
    tasks = [(spec, g, r) for g in range(len(grid)) for r in range(spec.R)]
    workers = spec.workers if spec.workers is not None else (os.cpu_count() or 1)

    started = time.perf_counter()
    done = 0
    if workers <= 1:
        stream = map(_replicate_task, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        chunk = max(1, len(tasks) // (workers * 16))
        stream = pool.map(_replicate_task, tasks, chunksize=chunk)
    try:
        for g, _r, outcomes in stream:
            for m_index, rejected, dropped, error, seconds in outcomes:
                cell = cells[(g, m_index)]
                cell.wall_time += seconds
                if error is not None:
                    cell.errors += 1
                    if len(cell.error_samples) < 3:
                        cell.error_samples.append(error)
                else:
                    cell.completed += 1
                    cell.rejections += int(rejected)
                    cell.dropped_total += dropped
            done += 1
            if progress is not None:
                progress(done, len(tasks))
    finally:
        if workers > 1:
            pool.shutdown()

    for cell in cells.values():
        if cell.errors > 0.2 * spec.R:
            cell.aborted = True

    ordered = [cells[(g, m)] for g in range(len(grid))
               for m in range(len(spec.methods))]
    return StudyReport(spec=spec, kind=kind, band=binomial_band(spec.R, spec.alpha),
                       cells=ordered, total_wall_time=time.perf_counter() - started)


def power_study(spec: StudySpec, progress=None) -> StudyReport:
    """Same machinery as run_study; the report is labeled as a power study."""
    return run_study(spec, kind="power", progress=progress)


def _theta_grid_methods(fitters_stats, thetas=(0.0, 0.25, 0.5, 0.75, 1.0)):
    methods = [MethodSpec(kind="classical", fitter="lm")]
    for theta in thetas:
        for fitter, stat in fitters_stats:
            methods.append(MethodSpec(kind="shift", fitter=fitter,
                                      statistic=stat, correction="variance",
                                      theta=theta))
    return tuple(methods)


# Named presets. The desk-* entries finish in minutes on a workstation and
# are the ones the acceptance tests exercise; the paper-*/supp-* entries
# carry the full study sizes and run for hours.
PRESETS = {
    "desk-null-se1": StudySpec(
        designs=("single_nuisance",), trends=("linear",), scenarios=("SE1",),
        methods=(MethodSpec(kind="shift", fitter="gam_l", statistic="cov",
                            correction="variance"),),
        interest="x2", R=500, K=199, n=100, label="desk null, SE1 linear"),
    "desk-null-grid": StudySpec(
        designs=("single_nuisance",), trends=("linear", "nonlinear"),
        scenarios=SCENARIOS,
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="gam_l"),
                 MethodSpec(kind="shift", fitter="gam_nl")),
        interest="x2", R=500, K=199, n=100, label="desk null, full scenario grid"),
    "desk-robust-ln": StudySpec(
        designs=("single_nuisance",), trends=("nonlinear",), scenarios=("LN",),
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="gam_nl", statistic="cov",
                            correction="variance")),
        interest="x2", R=500, K=199, n=100,
        label="desk robustness, lognormal errors"),
    "desk-power-x2": StudySpec(
        designs=("multi_independent",), trends=("nonlinear",), scenarios=("SE1",),
        methods=(MethodSpec(kind="shift", fitter="gam_nl", statistic="cov",
                            correction="variance"),
                 MethodSpec(kind="shift", fitter="gam_nl", statistic="dcov",
                            correction="variance")),
        interest="x2", R=300, K=199, n=75,
        label="desk power, squared effect on x2"),
    "paper-5.1": StudySpec(
        designs=("single_nuisance",), trends=("linear", "nonlinear"),
        scenarios=SCENARIOS,
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="nw"),
                 MethodSpec(kind="shift", fitter="gam_l"),
                 MethodSpec(kind="shift", fitter="gam_nl")),
        interest="x2", R=2000, K=499, n=100,
        label="single nuisance, full scenario grid, published sizes"),
    "paper-5.2": StudySpec(
        designs=("multi_independent",), trends=("linear", "nonlinear"),
        scenarios=("SE1",),
        methods=_theta_grid_methods((("gam_l", "cov"), ("gam_nl", "cov"),
                                     ("gam_nl", "dcov"))),
        interest="x3", R=1000, K=499, n=100,
        label="independent covariates, theta grid, null covariate x3"),
    "paper-5.3": StudySpec(
        designs=("multi_dependent",), trends=("linear", "nonlinear"),
        scenarios=("SE1",),
        methods=_theta_grid_methods((("gam_l", "cov"), ("gam_nl", "cov"),
                                     ("gam_nl", "dcov"))),
        interest="x3", R=1000, K=499, n=100,
        label="dependent covariates, theta grid, null covariate x3"),
    "supp-n25": StudySpec(
        designs=("single_nuisance",), trends=("linear", "nonlinear"),
        scenarios=("SE1",),
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="gam_l")),
        interest="x2", R=2000, K=499, n=25,
        window=Window(0.0, 0.5, 0.0, 0.5),
        label="small window, 25 observations"),
    "supp-n400": StudySpec(
        designs=("single_nuisance",), trends=("linear", "nonlinear"),
        scenarios=("SE1",),
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="gam_l")),
        interest="x2", R=2000, K=499, n=400,
        window=Window(0.0, 2.0, 0.0, 2.0),
        label="medium window, 400 observations"),
    "supp-n900": StudySpec(
        designs=("single_nuisance",), trends=("linear", "nonlinear"),
        scenarios=("SE1",),
        methods=(MethodSpec(kind="classical", fitter="lm"),
                 MethodSpec(kind="shift", fitter="gam_l")),
        interest="x2", R=2000, K=499, n=900,
        window=Window(0.0, 3.0, 0.0, 3.0),
        label="large window, 900 observations"),
}
