import numpy as np
import pytest

import lfsr.numcore as nc


@pytest.fixture(autouse=True)
def _restore_precision():
    # precision is process-global state; never let one test leak into the next
    prev = nc.get_precision()
    yield
    nc.set_precision(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
