import numpy as np
import pytest

from kgrowth.core import ConstantLearning, LearningFunction, UniformGrid


@pytest.fixture
def grid():
    return UniformGrid(20.0, 1000)


@pytest.fixture
def coarse_grid():
    return UniformGrid(20.0, 200)


@pytest.fixture
def power_law():
    return LearningFunction(0.075, 0.3)


@pytest.fixture
def constant_law():
    return ConstantLearning(0.075)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
