import numpy as np
import pytest

from shiftreg import SpatialDataset, UNIT_SQUARE


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(n=40, seed=0, names=("x1", "x2"), window=UNIT_SQUARE,
                 response=None):
    """Small synthetic dataset with GP-free covariates; fast to build."""
    r = np.random.default_rng(seed)
    locations = np.column_stack([
        r.uniform(window.x_min, window.x_max, n),
        r.uniform(window.y_min, window.y_max, n),
    ])
    covariates = {name: r.normal(size=n) for name in names}
    if response is None:
        response = sum(covariates.values()) + 0.5 * r.normal(size=n)
    return SpatialDataset(window=window, locations=locations,
                          covariates=covariates, response=np.asarray(response, dtype=float))
