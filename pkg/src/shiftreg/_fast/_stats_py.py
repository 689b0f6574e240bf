"""Vectorized numpy fallback for the compiled statistic kernels.

Same contracts and same values as the Cython module, traded for O(n^2)
temporary matrices. Selected automatically when the extension is missing
and on demand via SHIFTREG_PURE_PYTHON=1.
"""

from __future__ import annotations

import numpy as np


def dcov_terms(e, x):
    e = np.asarray(e, dtype=float)
    x = np.asarray(x, dtype=float)
    n = e.shape[0]
    if x.shape[0] != n:
        raise ValueError("length mismatch")
    de = np.abs(e[:, None] - e[None, :])
    dx = np.abs(x[:, None] - x[None, :])
    re = de.sum(axis=1)
    rx = dx.sum(axis=1)
    se = re.sum()
    sx = rx.sum()
    cross = float((de * dx).sum())
    n2 = float(n) * float(n)
    dcov2 = (cross - 2.0 * float(re @ rx) / n + se * sx / n2) / n2
    return float(dcov2), float(se / n2), float(sx / n2)


def kendall_tau(x, e):
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    n = x.shape[0]
    if e.shape[0] != n:
        raise ValueError("length mismatch")
    if n < 2:
        raise ValueError("need at least 2 observations")
    s = np.sign(x[:, None] - x[None, :]) * np.sign(e[:, None] - e[None, :])
    # the sum is an integer-valued float, exact for any realistic n
    return float(s.sum() / (n * (n - 1)))
