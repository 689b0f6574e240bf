"""End-to-end single test and backward stepwise variable selection.

``shift_test`` is the composition the CLI and the simulation harness both
run: rebuild the nuisance covariates at the requested theta, residualize
the response, hand residuals and the covariate of interest to the engine.

``backward_select`` repeats that test once per active covariate each round
and removes the covariate with the largest p-value while any p-value
exceeds alpha. Each round's tests draw their shift vectors from streams
keyed by (master_seed, round, original column index), so a trace is
reproducible regardless of how earlier rounds went.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .dataset import SpatialDataset
from .engine import ShiftPlan, ShiftTestResult, run_shift_test
from .errors import ValidationError
from .regression import default_g_kind, reconstruct_nuisance, residualize


def shift_test(data: SpatialDataset, interest: str, plan: ShiftPlan,
               fitter: str = "lm", theta: float = 1.0,
               g_fitter: str | None = None,
               fitter_options: dict | None = None) -> ShiftTestResult:
    """Reconstruct nuisance covariates, residualize, run the shift test."""
    recon = reconstruct_nuisance(data, interest, theta=theta,
                                 g_kind=g_fitter, f_kind=fitter)
    residuals = residualize(data, recon, f_kind=fitter, **(fitter_options or {}))
    provenance = {
        "interest": interest,
        "fitter": fitter,
        "theta": theta,
        "g_fitter": recon.g_kind,
    }
    return run_shift_test(data, residuals, interest, plan, provenance)


@dataclass(frozen=True)
class SelectionRound:
    """One pass over the active covariates."""

    index: int
    active: tuple
    p_values: dict
    removed: str | None


@dataclass(frozen=True)
class SelectionTrace:
    """Full record of a backward selection run."""

    rounds: tuple
    final_set: tuple
    alpha: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "rounds": [
                {
                    "round": r.index,
                    "active": list(r.active),
                    "p_values": {k: float(v) for k, v in r.p_values.items()},
                    "removed": r.removed,
                }
                for r in self.rounds
            ],
            "final_set": list(self.final_set),
            "config": self.config,
        }


def backward_select(data: SpatialDataset, alpha: float = 0.05,
                    plan: ShiftPlan | None = None, fitter: str = "lm",
                    theta: float = 1.0, g_fitter: str | None = None,
                    fitter_options: dict | None = None,
                    keep_results: bool = False) -> SelectionTrace:
    """Backward stepwise selection driven by shift-test p-values.

    Each round tests every active covariate against the remaining active
    ones. If the largest p-value exceeds alpha, that covariate is dropped
    (ties go to the earliest column) and the next round starts; otherwise
    the procedure stops. At most d+1 rounds for d covariates. ``alpha`` up
    to and including 1 is accepted; alpha = 1 retains everything, since
    p-values never exceed 1.

    With ``keep_results`` the full ShiftTestResult of every test is stored
    under config["results"] keyed by (round, covariate name).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    if not data.covariate_names:
        raise ValidationError("selection needs at least one covariate")
    if plan is None:
        plan = ShiftPlan()

    column_index = {name: j for j, name in enumerate(data.covariate_names)}
    active = list(data.covariate_names)
    rounds = []
    results = {}
    root_seed = plan.master_seed
    head = tuple(root_seed) if isinstance(root_seed, (tuple, list)) else (root_seed,)

    round_index = 0
    while active:
        round_index += 1
        current = tuple(active)
        working = _subset(data, current)
        p_values = {}
        for name in current:
            round_plan = replace(plan, master_seed=head + (round_index, column_index[name]))
            outcome = shift_test(working, name, round_plan,
                                 fitter=fitter, theta=theta, g_fitter=g_fitter,
                                 fitter_options=fitter_options)
            p_values[name] = outcome.p_value
            if keep_results:
                results[(round_index, name)] = outcome

        worst = max(p_values.values())
        removed = None
        if worst > alpha:
            removed = next(n for n in current if p_values[n] == worst)
            active.remove(removed)
        rounds.append(SelectionRound(index=round_index, active=current,
                                     p_values=p_values, removed=removed))
        if removed is None:
            break

    config = {
        "fitter": fitter,
        "theta": theta,
        "g_fitter": g_fitter if g_fitter is not None else default_g_kind(fitter),
        "statistic": plan.statistic,
        "correction": plan.correction,
        "k": plan.K,
        "seed": list(head) if len(head) > 1 else head[0],
    }
    if keep_results:
        config["results"] = results
    return SelectionTrace(rounds=tuple(rounds), final_set=tuple(active),
                          alpha=alpha, config=config)


def _subset(data: SpatialDataset, names) -> SpatialDataset:
    """Dataset view keeping only the named covariates (original order)."""
    keep = [n for n in data.covariate_names if n in set(names)]
    return SpatialDataset(
        window=data.window,
        locations=data.locations,
        covariates={n: data.covariates[n] for n in keep},
        response=data.response,
        response_name=data.response_name,
    )
