"""Additive models with full-rank thin-plate smooths, fit by penalized
least squares with GCV-chosen smoothing parameters.

Two model shapes share the machinery:

    linear mean (kind gam_l):     y = b0 + sum_j b_j x_j + psi(s) + eps
    nonlinear mean (kind gam_nl): y = b0 + sum_j f_j(x_j) + psi(s) + eps

psi is a 2-D thin-plate smooth over the locations with radial basis
eta(r) = r^2 log(r) / (8 pi) and null space {1, s_x, s_y}; each f_j is a 1-D
smooth with radial basis r^3 (the natural-cubic form; the exact constant in
front of r^3 is a normalization absorbed by the coefficient solve, so we
keep the basis clean) and null space {1, x_j}. One radial function sits on
every data site, so the basis is full rank.

The interpolation constraint T' delta = 0 is enforced by writing
delta = Q2 gamma with Q2 an orthonormal null-space basis of T', which turns
the curvature penalty into gamma' (Q2' E Q2) gamma. Each smooth's constant
is absorbed by the global intercept; its remaining polynomial columns stay
unpenalized in the design. Per-smooth lambdas are chosen by generalized
cross-validation on a log-spaced grid, coordinate-descent style (all other
lambdas held fixed), two sweeps. The penalized normal equations get one
relative ridge of 1e-10 if Cholesky fails, then raise SingularSystem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from ..errors import RankDeficientDesign, SingularSystem
from .base import FittedModel

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-8.0, 4.0, 20))
_RIDGE = 1e-10


def radial_2d(r) -> np.ndarray:
    """Thin-plate radial basis in the plane: r^2 log(r) / (8 pi), 0 at 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r * r * np.log(r) / (8.0 * np.pi)
    return np.where(r > 0.0, out, 0.0)


def radial_1d(r) -> np.ndarray:
    """1-D analogue, normalized to the natural-cubic kernel r^3."""
    r = np.asarray(r, dtype=float)
    return r * r * r


@dataclass
class _Smooth:
    """Precomputed pieces of one smooth term."""

    label: str
    sites: np.ndarray        # (n, d_t) knot positions = data sites
    radial: callable
    q2: np.ndarray           # (n, n - M) null-space basis of T'
    basis: np.ndarray        # E @ q2, the penalized design columns
    penalty: np.ndarray      # q2' E q2
    penalty_root: np.ndarray # G with G G' = penalty (eigen square root)
    linear_part: np.ndarray  # T without its constant column

    @property
    def n_penalized(self) -> int:
        return self.basis.shape[1]


def _poly_matrix(values: np.ndarray) -> np.ndarray:
    """Null-space polynomial matrix: [1, x] in 1-D, [1, s_x, s_y] in 2-D."""
    return np.column_stack([np.ones(values.shape[0]), values])


def _build_smooth(label: str, values: np.ndarray) -> _Smooth:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    radial = radial_1d if v.shape[1] == 1 else radial_2d
    diff = v[:, None, :] - v[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    e_mat = radial(dist)
    t_mat = _poly_matrix(v)
    q_full, _ = np.linalg.qr(t_mat, mode="complete")
    q2 = q_full[:, t_mat.shape[1]:]
    penalty = q2.T @ e_mat @ q2
    penalty = 0.5 * (penalty + penalty.T)
    # eigen square root; tiny negative eigenvalues are rounding noise
    eigval, eigvec = np.linalg.eigh(penalty)
    eigval = np.clip(eigval, 0.0, None)
    penalty_root = eigvec * np.sqrt(eigval)
    return _Smooth(
        label=label, sites=v, radial=radial, q2=q2,
        basis=e_mat @ q2, penalty=penalty, penalty_root=penalty_root,
        linear_part=t_mat[:, 1:],
    )


@dataclass
class _Assembled:
    design: np.ndarray
    dtd: np.ndarray
    dty: np.ndarray
    smooths: list
    block: list          # column slice of each smooth's penalized block
    n_unpenalized: int
    parametric_slice: slice
    linear_slices: list  # slice of each smooth's unpenalized polynomial part


def _assemble(locations, X, y, nonlinear: bool) -> _Assembled:
    n = y.shape[0]
    smooths: list[_Smooth] = []
    unpen_cols = [np.ones((n, 1))]
    linear_slices = []
    col = 1

    d = 0 if X is None else X.shape[1]
    if nonlinear:
        parametric_slice = slice(1, 1)
        for j in range(d):
            smooths.append(_build_smooth(f"f(x{j + 1})", X[:, j]))
    else:
        parametric_slice = slice(1, 1 + d)
        if d:
            unpen_cols.append(X)
        col += d
    smooths.append(_build_smooth("psi(s)", locations))

    for sm in smooths:
        unpen_cols.append(sm.linear_part)
        linear_slices.append(slice(col, col + sm.linear_part.shape[1]))
        col += sm.linear_part.shape[1]

    n_unpen = col
    blocks = []
    design_cols = unpen_cols[:]
    for sm in smooths:
        blocks.append(slice(col, col + sm.n_penalized))
        design_cols.append(sm.basis)
        col += sm.n_penalized
    design = np.hstack(design_cols)
    return _Assembled(
        design=design, dtd=design.T @ design, dty=design.T @ y,
        smooths=smooths, block=blocks, n_unpenalized=n_unpen,
        parametric_slice=parametric_slice, linear_slices=linear_slices,
    )


def _penalized_solve(asm: _Assembled, y: np.ndarray, lambdas: np.ndarray):
    """Solve the penalized normal equations; returns (coef, rss, edf, gcv)."""
    p = asm.dtd.shape[0]
    n = y.shape[0]
    m = asm.dtd.copy()
    for lam, sl, sm in zip(lambdas, asm.block, asm.smooths):
        m[sl, sl] += lam * sm.penalty
    try:
        factor = cho_factor(m, lower=True)
    except np.linalg.LinAlgError:
        m[np.diag_indices(p)] += _RIDGE * float(np.trace(m)) / p
        try:
            factor = cho_factor(m, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("penalized normal equations stayed singular "
                                 "after ridge jitter") from exc
    coef = cho_solve(factor, asm.dty)
    resid = y - asm.design @ coef
    rss = float(resid @ resid)
    # edf = tr(M^-1 D'D) = p - sum_t lambda_t tr(M^-1 Ptilde_t)
    edf = float(p)
    lower = factor[0]
    for lam, sl, sm in zip(lambdas, asm.block, asm.smooths):
        if lam == 0.0 or sm.penalty_root.size == 0:
            continue
        # the right-hand side vanishes above the block, so forward
        # substitution only needs the trailing triangle
        start = sl.start
        rhs = np.zeros((p - start, sm.penalty_root.shape[1]))
        rhs[: sl.stop - start] = sm.penalty_root
        z = solve_triangular(lower[start:, start:], rhs, lower=True)
        edf -= lam * float((z * z).sum())
    denom = max(n - edf, 1e-8)
    gcv = n * rss / denom**2
    return coef, rss, edf, gcv


def fit_gam(locations, X, y, nonlinear: bool = False, lambda_grid=None,
            fixed_lambdas=None, gcv_cycles: int = 2) -> FittedModel:
    """Fit the additive model; see the module docstring for the two shapes.

    ``fixed_lambdas`` (scalar or one value per smooth, spatial smooth last)
    bypasses the GCV search entirely.
    """
    locations = np.asarray(locations, dtype=float)
    y = np.asarray(y, dtype=float)
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] == 0:
            X = None
    if X is not None and np.linalg.matrix_rank(np.column_stack([np.ones(y.shape[0]), X])) < X.shape[1] + 1:
        raise RankDeficientDesign("covariate columns are collinear or constant")

    asm = _assemble(locations, X, y, nonlinear)
    n_smooth = len(asm.smooths)
    grid = np.asarray(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid, dtype=float)

    if fixed_lambdas is not None:
        lambdas = np.broadcast_to(np.asarray(fixed_lambdas, dtype=float), (n_smooth,)).copy()
        coef, rss, edf, gcv = _penalized_solve(asm, y, lambdas)
    else:
        lambdas = np.ones(n_smooth)
        coef = rss = edf = gcv = None
        for _ in range(max(1, gcv_cycles)):
            for t in range(n_smooth):
                best_val, best_lam, best_fit = np.inf, lambdas[t], None
                for lam in grid:
                    trial = lambdas.copy()
                    trial[t] = lam
                    fit = _penalized_solve(asm, y, trial)
                    if fit[3] < best_val:
                        best_val, best_lam, best_fit = fit[3], lam, fit
                lambdas[t] = best_lam
                coef, rss, edf, gcv = best_fit

    fitted = asm.design @ coef
    kind = "gam_nl" if nonlinear else "gam_l"

    def predictor(X_new, locations_new):
        if locations_new is None:
            raise ValueError("prediction needs locations")
        locations_new = np.asarray(locations_new, dtype=float)
        m = locations_new.shape[0]
        out = np.full(m, coef[0])
        if X_new is not None:
            X_new = np.asarray(X_new, dtype=float)
            if X_new.ndim == 1:
                X_new = X_new[:, None]
        if asm.parametric_slice.stop > asm.parametric_slice.start:
            out += X_new @ coef[asm.parametric_slice]
        for t, sm in enumerate(asm.smooths):
            new_vals = locations_new if sm.label == "psi(s)" else X_new[:, t]
            if new_vals.ndim == 1:
                new_vals = new_vals[:, None]
            diff = new_vals[:, None, :] - sm.sites[None, :, :]
            dist = np.sqrt((diff * diff).sum(axis=2))
            delta = sm.q2 @ coef[asm.block[t]]
            out += sm.radial(dist) @ delta
            out += _poly_matrix(new_vals)[:, 1:] @ coef[asm.linear_slices[t]]
        return out

    return FittedModel(
        kind=kind,
        fitted=fitted,
        residuals=y - fitted,
        hyperparameters={
            "lambdas": {sm.label: float(lam) for sm, lam in zip(asm.smooths, lambdas)},
            "gcv": float(gcv),
            "edf": float(edf),
            "rss": float(rss),
        },
        predictor=predictor,
    )


def fit_smooth_1d(x, y, lambda_grid=None) -> FittedModel:
    """Penalized 1-D smooth of y on x, lambda by GCV over the same grid.

    Used for the dependence fit between covariates when a smooth (rather
    than linear or kernel) version is requested.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    sm = _build_smooth("g", x)
    design = np.hstack([np.ones((x.size, 1)), sm.linear_part, sm.basis])
    asm = _Assembled(
        design=design, dtd=design.T @ design, dty=design.T @ y,
        smooths=[sm], block=[slice(2, 2 + sm.n_penalized)],
        n_unpenalized=2, parametric_slice=slice(1, 1),
        linear_slices=[slice(1, 2)],
    )
    grid = np.asarray(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid, dtype=float)
    best = None
    for lam in grid:
        fit = _penalized_solve(asm, y, np.array([lam]))
        if best is None or fit[3] < best[1][3]:
            best = (lam, fit)
    lam, (coef, rss, edf, gcv) = best
    fitted = design @ coef

    def predictor(X_new, locations_new=None):
        v = np.asarray(X_new, dtype=float).reshape(-1, 1)
        dist = np.abs(v - sm.sites.T)
        out = coef[0] + v[:, 0] * coef[1]
        out += sm.radial(dist) @ (sm.q2 @ coef[2:])
        return out

    return FittedModel(
        kind="smooth_1d",
        fitted=fitted,
        residuals=y - fitted,
        hyperparameters={"lambda": float(lam), "gcv": float(gcv), "edf": float(edf)},
        predictor=predictor,
    )
