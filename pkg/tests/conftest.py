import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_design(rng, n, p, intercept=False):
    X = rng.standard_normal((n, p))
    if intercept and p:
        X[:, 0] = 1.0
    return X
