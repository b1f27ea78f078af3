import numpy as np
import pytest

from roughavg import (
    GridPath,
    lift_piecewise_linear,
    sample_fbm,
)


@pytest.fixture(scope="session")
def bm_path_2d():
    return sample_fbm(0.5, 2, 0.0, 0.01, 200, seed=3)


@pytest.fixture(scope="session")
def bm_lift_2d(bm_path_2d):
    return lift_piecewise_linear(bm_path_2d)


@pytest.fixture(scope="session")
def smooth_path_1d():
    t = np.linspace(0.0, 1.0, 1001)
    return GridPath(0.0, 1e-3, np.sin(2.0 * np.pi * t) + 0.5 * t)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
