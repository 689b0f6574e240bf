"""Independent reference implementations used only by the test suite.

These are deliberately written the slow, literal way (explicit double-centered
matrices, quadratic pair sums) and were frozen before the package's own
statistic kernels existed. Tests compare the fast kernels against these; the
package must never import this module.
"""

from __future__ import annotations

import numpy as np


def dcov_squared_matrix(e, x):
    """Squared distance covariance via explicit double-centered matrices.

    Returns (dcov2, grand_mean_dist_e, grand_mean_dist_x). The double
    centering subtracts row means, column means, and adds back the grand
    mean; the statistic averages the elementwise product over all n^2
    entries, diagonal included.
    """
    e = np.asarray(e, dtype=float)
    x = np.asarray(x, dtype=float)
    n = e.shape[0]
    de = np.abs(e[:, None] - e[None, :])
    dx = np.abs(x[:, None] - x[None, :])
    ce = de - de.mean(axis=1, keepdims=True) - de.mean(axis=0, keepdims=True) + de.mean()
    cx = dx - dx.mean(axis=1, keepdims=True) - dx.mean(axis=0, keepdims=True) + dx.mean()
    return float((ce * cx).sum() / n**2), float(de.mean()), float(dx.mean())


def kendall_definition(x, e):
    """Kendall rank statistic straight from its defining double sum.

    (1 / (n (n - 1))) * sum_{i != j} sgn(x_i - x_j) * sgn(e_i - e_j),
    with sgn(0) = 0 so tied pairs contribute nothing and no tie
    correction is applied to the denominator.
    """
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    n = x.shape[0]
    s = np.sign(x[:, None] - x[None, :]) * np.sign(e[:, None] - e[None, :])
    return float(s.sum() / (n * (n - 1)))


def sample_covariance_definition(x, e):
    """Plain bias-corrected sample covariance, written out longhand."""
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    n = x.shape[0]
    return float(((x - x.mean()) * (e - e.mean())).sum() / (n - 1))
