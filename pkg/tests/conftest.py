import numpy as np
import pytest

from b1calc import Domain


@pytest.fixture
def unit():
    return Domain.interval(0.0, 1.0, step=0.1)


@pytest.fixture
def sym():
    return Domain.interval(-1.0, 1.0, step=0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)
