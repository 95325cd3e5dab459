import numpy as np
import pytest

from moboa.pool import load_default_pool


@pytest.fixture(scope="session")
def pool():
    return load_default_pool()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
