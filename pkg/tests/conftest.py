import numpy as np
import pytest

from dualmink.sphere_grid import build_grid

_CACHE = {}


def cached_grid(n, resolution):
    key = (n, resolution)
    if key not in _CACHE:
        _CACHE[key] = build_grid(n, resolution)
    return _CACHE[key]


@pytest.fixture(scope="session")
def s2_level3():
    return cached_grid(3, 3)


@pytest.fixture(scope="session")
def s2_level4():
    return cached_grid(3, 4)


@pytest.fixture(scope="session")
def s1_64():
    return cached_grid(2, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
