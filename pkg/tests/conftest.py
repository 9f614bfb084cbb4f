import numpy as np
import pytest

from bordatopk.formats import parse_batch
from bordatopk.preflib import load_fixture


@pytest.fixture
def example2_batch():
    return parse_batch(load_fixture("example2_batch.txt"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
