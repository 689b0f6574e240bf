"""Linear mean trends with spatially correlated errors.

Two routes to the same model y = beta_0 + X beta + eps, eps a stationary
field plus nugget:

``fit_lm_ml`` maximizes the Gaussian profile likelihood over the log
covariance parameters (partial sill, range, nugget) with Nelder-Mead from a
moment-matched start plus jittered restarts, then solves generalized least
squares at the optimum. t-statistics use n - d - 1 degrees of freedom.

``fit_gls_variogram`` is the classical two-step shortcut: ordinary least
squares, a binned Matheron semivariogram of the residuals, one weighted
least-squares fit of the chosen family to the bins (weights = bin counts),
then a single GLS solve under the fitted covariance. No iteration. When the
variogram fit fails or is degenerate the model falls back to the OLS
solution and says so in ``warnings``.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize
from scipy import stats as sstats
from scipy.linalg import solve_triangular

from ..errors import OptimizerDiverged, RankDeficientDesign, VariogramFitFailed
from ..kernels import Kernel, correlation, pairwise_distances, variogram as kernel_variogram
from .base import FittedModel

_LOG_BOUND = 30.0  # clamp on log-parameters; exp(30) ~ 1e13 is already absurd
_VARIOGRAM_BINS = 12


def _design(X, n) -> np.ndarray:
    if X is None:
        return np.ones((n, 1))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_rank(D: np.ndarray) -> None:
    if np.linalg.matrix_rank(D) < D.shape[1]:
        raise RankDeficientDesign(
            f"design has rank < {D.shape[1]} (collinear or constant columns)"
        )


def _gls_beta(D, y, lower):
    """GLS coefficients given the lower Cholesky factor of the covariance."""
    wd = solve_triangular(lower, D, lower=True)
    wy = solve_triangular(lower, y, lower=True)
    gram = wd.T @ wd
    beta = np.linalg.solve(gram, wd.T @ wy)
    return beta, wd, wy, gram


def _profile_nll(z, dists, family, shape, D, y):
    """Negative profile log-likelihood at log-parameters z."""
    z = np.clip(z, -_LOG_BOUND, _LOG_BOUND)
    sigma2, phi, tau2 = np.exp(z)
    kern = Kernel(family, variance=1.0, range_=phi, shape=shape)
    cov = sigma2 * correlation(kern, dists)
    n = y.shape[0]
    cov[np.diag_indices(n)] += tau2 + 1e-12 * (sigma2 + tau2)
    try:
        lower = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return np.inf
    try:
        beta, wd, wy, _ = _gls_beta(D, y, lower)
    except np.linalg.LinAlgError:
        return np.inf
    resid = wy - wd @ beta
    nll = 0.5 * (n * np.log(2 * np.pi)
                 + 2.0 * np.log(np.diag(lower)).sum()
                 + float(resid @ resid))
    return nll if np.isfinite(nll) else np.inf


def fit_lm_ml(locations, X, y, family: str = "squared_exponential",
              shape: float = 1.0, restarts: int = 3,
              restart_seed: int = 1234) -> FittedModel:
    """Gaussian maximum likelihood for a linear trend with correlated errors.

    The optimizer works on (log sigma2, log phi, log tau2); the start matches
    moments of the OLS residuals (variance split evenly between sill and
    nugget, range at a fifth of the window diagonal) and each restart jitters
    the start on the log scale with a fixed-seed generator, so the fit is
    deterministic. The best finite optimum wins; if every run is non-finite
    the fit raises OptimizerDiverged.
    """
    locations = np.asarray(locations, dtype=float)
    y = np.asarray(y, dtype=float)
    D = _design(X, y.shape[0])
    n, p = D.shape
    if n <= p + 1:
        raise ValueError(f"need n > d + 2 observations, got n={n}, d={p - 1}")
    _check_rank(D)

    dists = pairwise_distances(locations)
    beta_ols, *_ = np.linalg.lstsq(D, y, rcond=None)
    r0 = y - D @ beta_ols
    v0 = max(float(r0 @ r0) / max(n - p, 1), 1e-10)
    start = np.log([0.5 * v0, 0.2 * float(dists.max()), 0.5 * v0])
    start_nll = _profile_nll(start, dists, family, shape, D, y)

    rng = np.random.default_rng(restart_seed)
    best = None
    for attempt in range(restarts + 1):
        z0 = start if attempt == 0 else start + 0.5 * rng.standard_normal(3)
        res = optimize.minimize(
            _profile_nll, z0, args=(dists, family, shape, D, y),
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 500, "maxfev": 1500},
        )
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise OptimizerDiverged("no Nelder-Mead restart reached a finite likelihood")

    z = np.clip(best.x, -_LOG_BOUND, _LOG_BOUND)
    sigma2, phi, tau2 = np.exp(z)
    kern = Kernel(family, variance=1.0, range_=phi, shape=shape)
    cov = sigma2 * correlation(kern, dists)
    cov[np.diag_indices(n)] += tau2 + 1e-12 * (sigma2 + tau2)
    lower = np.linalg.cholesky(cov)
    beta, wd, wy, gram = _gls_beta(D, y, lower)
    fitted = D @ beta
    beta_cov = np.linalg.inv(gram)
    se = np.sqrt(np.diag(beta_cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = beta / se
    dof = n - (p - 1) - 1
    pvals = 2.0 * sstats.t.sf(np.abs(tvals), dof)
    names = ["intercept"] + [f"b{j}" for j in range(1, p)]
    return FittedModel(
        kind="lm",
        fitted=fitted,
        residuals=y - fitted,
        coefficients=beta,
        coefficient_names=names,
        stderr=se,
        tvalues=tvals,
        pvalues=pvals,
        dof=dof,
        hyperparameters={
            "family": family, "variance": float(sigma2), "range": float(phi),
            "nugget": float(tau2), "loglik": -float(best.fun),
            "start_loglik": -float(start_nll),
        },
        predictor=lambda Xn, locs=None: _design(Xn, np.asarray(Xn).shape[0] if Xn is not None else 0) @ beta,
    )


def empirical_semivariogram(locations, values, n_bins: int = _VARIOGRAM_BINS,
                            max_dist: float | None = None):
    """Matheron estimator on equal-width distance bins over (0, max_dist].

    Returns (bin_centers, gamma_hat, counts) for the nonempty bins. The
    default reach is half the diagonal of the point cloud's bounding box.
    """
    locations = np.asarray(locations, dtype=float)
    values = np.asarray(values, dtype=float)
    dists = pairwise_distances(locations)
    if max_dist is None:
        max_dist = 0.5 * float(dists.max())
    iu = np.triu_indices(values.shape[0], k=1)
    h = dists[iu]
    sq = 0.5 * (values[iu[0]] - values[iu[1]]) ** 2
    keep = (h > 0) & (h <= max_dist)
    h = h[keep]
    sq = sq[keep]
    edges = np.linspace(0.0, max_dist, n_bins + 1)
    which = np.clip(np.searchsorted(edges, h, side="left") - 1, 0, n_bins - 1)
    centers, gammas, counts = [], [], []
    for b in range(n_bins):
        mask = which == b
        if not mask.any():
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        gammas.append(float(sq[mask].mean()))
        counts.append(int(mask.sum()))
    return np.array(centers), np.array(gammas), np.array(counts, dtype=float)


def fit_gls_variogram(locations, X, y, family: str = "squared_exponential",
                      shape: float = 1.0) -> FittedModel:
    """OLS, one binned variogram fit, one GLS solve. See the module docstring."""
    locations = np.asarray(locations, dtype=float)
    y = np.asarray(y, dtype=float)
    D = _design(X, y.shape[0])
    n, p = D.shape
    _check_rank(D)

    beta_ols, *_ = np.linalg.lstsq(D, y, rcond=None)
    fitted_ols = D @ beta_ols
    resid_ols = y - fitted_ols

    def ols_model(warning: str) -> FittedModel:
        sig2 = float(resid_ols @ resid_ols) / max(n - p, 1)
        gram = D.T @ D
        beta_cov = sig2 * np.linalg.inv(gram)
        se = np.sqrt(np.diag(beta_cov))
        with np.errstate(divide="ignore", invalid="ignore"):
            tvals = beta_ols / se
        dof = n - (p - 1) - 1
        return FittedModel(
            kind="gls", fitted=fitted_ols, residuals=resid_ols,
            coefficients=beta_ols, stderr=se, tvalues=tvals,
            pvalues=2.0 * sstats.t.sf(np.abs(tvals), dof), dof=dof,
            hyperparameters={"family": family, "fell_back_to_ols": True},
            warnings=[warning],
            predictor=lambda Xn, locs=None: _design(Xn, np.asarray(Xn).shape[0]) @ beta_ols,
        )

    scale = float(np.var(y)) or 1.0
    if float(np.var(resid_ols)) < 1e-14 * scale:
        return ols_model("degenerate residuals, variogram skipped, OLS kept")

    centers, gammas, counts = empirical_semivariogram(locations, resid_ols)
    if centers.size < 3:
        return ols_model("fewer than 3 nonempty variogram bins, OLS kept")

    def wls_resid(params):
        sigma2, phi, tau2 = params
        kern = Kernel(family, variance=max(sigma2, 1e-12),
                      range_=max(phi, 1e-9), nugget=max(tau2, 0.0), shape=shape)
        return np.sqrt(counts) * (kernel_variogram(kern, centers) - gammas)

    sill_guess = max(float(gammas.max()), 1e-8)
    nug_guess = min(max(float(gammas[0]), 1e-8), sill_guess)
    x0 = [max(sill_guess - nug_guess, 1e-8), max(float(centers[-1]) / 4.0, 1e-6), nug_guess]
    try:
        fit = optimize.least_squares(
            wls_resid, x0, bounds=([1e-12, 1e-9, 0.0], [np.inf, np.inf, np.inf]),
            max_nfev=500,
        )
        if not np.all(np.isfinite(fit.x)) or not np.isfinite(fit.cost):
            raise VariogramFitFailed("non-finite variogram parameters")
    except (VariogramFitFailed, ValueError):
        return ols_model("variogram fit failed, OLS kept")

    sigma2, phi, tau2 = fit.x
    kern = Kernel(family, variance=1.0, range_=phi, shape=shape)
    cov = sigma2 * correlation(kern, pairwise_distances(locations))
    cov[np.diag_indices(n)] += tau2 + 1e-10 * (sigma2 + tau2 + 1.0)
    try:
        lower = np.linalg.cholesky(cov)
        beta, wd, wy, gram = _gls_beta(D, y, lower)
    except np.linalg.LinAlgError:
        return ols_model("fitted covariance not positive definite, OLS kept")
    fitted = D @ beta
    beta_cov = np.linalg.inv(gram)
    se = np.sqrt(np.diag(beta_cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = beta / se
    dof = n - (p - 1) - 1
    return FittedModel(
        kind="gls", fitted=fitted, residuals=y - fitted,
        coefficients=beta, stderr=se, tvalues=tvals,
        pvalues=2.0 * sstats.t.sf(np.abs(tvals), dof), dof=dof,
        hyperparameters={
            "family": family, "variance": float(sigma2), "range": float(phi),
            "nugget": float(tau2), "fell_back_to_ols": False,
            "variogram_bins": int(centers.size),
        },
        predictor=lambda Xn, locs=None: _design(Xn, np.asarray(Xn).shape[0]) @ beta,
    )


def classical_t_test(locations, X, y, interest_column: int,
                     family: str = "squared_exponential") -> dict:
    """Baseline t-test of one coefficient in the full ML linear model.

    ``interest_column`` indexes the covariate columns of X (0-based). This is
    the conventional approach the shift tests are compared against.
    """
    model = fit_lm_ml(locations, X, y, family=family)
    j = interest_column + 1  # skip the intercept
    return {
        "estimate": float(model.coefficients[j]),
        "stderr": float(model.stderr[j]),
        "t": float(model.tvalues[j]),
        "p_value": float(model.pvalues[j]),
        "dof": model.dof,
        "model": model,
    }
