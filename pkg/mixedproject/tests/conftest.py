import numpy as np
import pytest
from unittest import mock

from groundstates.energy import ModelParams, Pair
from groundstates.spectral import make_grid
from groundstates.weights import AnnularGaussianWeight, ConstantWeight


@pytest.fixture
def mock_redis():
    patched_cursor = mock.MagicMock()
    patched_cursor.get.return_value = 666
    patched_redis = mock.MagicMock()
    patched_redis.return_value = patched_cursor
    with mock.patch('redis.Redis', patched_redis):
        yield patched_redis, patched_cursor


@pytest.fixture
def grid():
    return make_grid(32, 32, 16.0, 16.0)


@pytest.fixture
def subcritical():
    return ModelParams(0.5, 0.5, 2.0, 2.0, kappa=1.0)


@pytest.fixture
def critical():
    return ModelParams(0.5, 0.5, 3.0, 3.0, kappa=1.0)


@pytest.fixture
def constant_weight():
    return ConstantWeight(c=1.0)


@pytest.fixture
def annular_weight():
    return AnnularGaussianWeight(a=1.0)


def gaussian_pair(grid, wu=1.5, wv=2.0, shift=0.0):
    xx, yy = grid.mesh
    u = np.exp(-((xx - shift) ** 2 + yy ** 2) / wu ** 2)
    v = 0.8 * np.exp(-(xx ** 2 + (yy + shift) ** 2) / wv ** 2)
    return Pair.from_stack(grid, np.stack([u, v]))


@pytest.fixture
def pair(grid):
    return gaussian_pair(grid)


@pytest.fixture
def make_pair():
    return gaussian_pair
