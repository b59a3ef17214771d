import numpy as np
import pytest

from greenchain import BirthDeathChain
from greenchain.generate import random_chain


@pytest.fixture
def symmetric04():
    """Simple symmetric walk on {0..4}, absorbed at both ends."""
    return BirthDeathChain.uniform(0, 4, 0.5, 0.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lazy_chains():
    rng = np.random.default_rng(7)
    return [random_chain(rng, -8, 8) for _ in range(10)]
