import numpy as np
import pytest

from ncbm.model import FiniteNModel


@pytest.fixture(scope="session")
def model3():
    """Three observation times, the standard small test model."""
    return FiniteNModel(4, 1.0, (0.4, 0.7, 1.0))


@pytest.fixture(scope="session")
def model2():
    return FiniteNModel(2, 1.0, (0.4, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
