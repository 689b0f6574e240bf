"""Nadaraya-Watson regression with a product Epanechnikov kernel.

The kernel is the variance-one Epanechnikov K(u) = 3 (1 - u^2/5) / (4 sqrt 5)
on u^2 < 5 and zero outside, multiplied across covariate axes. Bandwidths
are chosen per axis by leave-one-out least-squares cross-validation with a
golden-section search over [0.05 sd, 3 sd], cycling through the axes twice.

The kernel has compact support, so a prediction point can end up with no
sample point in range; prediction widens that point's bandwidths by factors
of 1.5 (at most 10 times) before giving up with EmptyNeighborhood. In-sample
fitted values include the point's own weight K(0)^d > 0 and can never be
empty.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyNeighborhood
from .base import FittedModel

_SQRT5 = np.sqrt(5.0)
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_CV_LO, _CV_HI = 0.05, 3.0    # bandwidth search range in units of the axis sd
_WIDEN, _MAX_WIDENINGS = 1.5, 10


def epanechnikov(u) -> np.ndarray:
    """Variance-one Epanechnikov kernel, support |u| < sqrt(5)."""
    u = np.asarray(u, dtype=float)
    out = 3.0 * (1.0 - u * u / 5.0) / (4.0 * _SQRT5)
    return np.where(u * u < 5.0, out, 0.0)


def _weight_matrix(queries, samples, bandwidths) -> np.ndarray:
    """W[q, i] = prod_j K((queries[q, j] - samples[i, j]) / h_j)."""
    q = np.asarray(queries, dtype=float)
    s = np.asarray(samples, dtype=float)
    w = np.ones((q.shape[0], s.shape[0]))
    for j in range(s.shape[1]):
        w *= epanechnikov((q[:, j, None] - s[None, :, j]) / bandwidths[j])
    return w


def _loo_score(X, y, bandwidths) -> float:
    """Leave-one-out squared error; empty neighborhoods incur a stiff,
    monotone penalty so the search is pushed toward usable bandwidths."""
    w = _weight_matrix(X, X, bandwidths)
    np.fill_diagonal(w, 0.0)
    denom = w.sum(axis=1)
    ok = denom > 0
    base = float(((y - y.mean()) ** 2).sum()) + 1.0
    if not ok.all():
        return base * (1.0 + float((~ok).sum()))
    fit = (w @ y) / denom
    return float(((y - fit) ** 2).sum())


def _golden_section(f, lo, hi, iters: int = 40) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def select_bandwidths(X, y, cycles: int = 2) -> np.ndarray:
    """Axis-by-axis golden-section LOO-CV bandwidths (deterministic)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sds = X.std(axis=0, ddof=1)
    sds = np.where(sds > 0, sds, 1.0)  # constant axes get a nominal scale
    h = sds.copy()
    for _ in range(cycles):
        for j in range(X.shape[1]):
            def score(hj, j=j):
                trial = h.copy()
                trial[j] = hj
                return _loo_score(X, y, trial)

            h[j] = _golden_section(score, _CV_LO * sds[j], _CV_HI * sds[j])
    return h


def fit_nw(X, y, bandwidth=None, cycles: int = 2) -> FittedModel:
    """Fit the smoother; ``bandwidth`` (scalar or per-axis) skips the CV."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y length mismatch")
    if bandwidth is None:
        h = select_bandwidths(X, y, cycles=cycles)
        chosen = "loo_cv"
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (X.shape[1],)).copy()
        if (h <= 0).any():
            raise ValueError("bandwidths must be positive")
        chosen = "fixed"

    w = _weight_matrix(X, X, h)
    fitted = (w @ y) / w.sum(axis=1)  # self-weight K(0)^d keeps this finite

    def predictor(X_new, locations=None):
        q = np.asarray(X_new, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        wq = _weight_matrix(q, X, h)
        denom = wq.sum(axis=1)
        out = np.empty(q.shape[0])
        ok = denom > 0
        out[ok] = (wq[ok] @ y) / denom[ok]
        for i in np.flatnonzero(~ok):
            hi = h.copy()
            for _ in range(_MAX_WIDENINGS):
                hi *= _WIDEN
                wi = _weight_matrix(q[i : i + 1], X, hi)
                di = wi.sum()
                if di > 0:
                    out[i] = float(wi @ y) / di
                    break
            else:
                raise EmptyNeighborhood(
                    f"no sample within bandwidth of query {i} after "
                    f"{_MAX_WIDENINGS} widenings"
                )
        return out

    return FittedModel(
        kind="nw",
        fitted=fitted,
        residuals=y - fitted,
        hyperparameters={"bandwidth": h.tolist(), "bandwidth_rule": chosen},
        predictor=predictor,
    )
