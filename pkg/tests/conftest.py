import numpy as np
import pytest

from fastdbar.geometry import chest_domain, electrode_quadrature, unit_disk
from fastdbar.patterns import pattern_set


@pytest.fixture(scope="session")
def disk():
    return unit_disk(32)


@pytest.fixture(scope="session")
def patterns(disk):
    return pattern_set(32, 0, 1.0, electrode_quadrature(disk).weights)


@pytest.fixture(scope="session")
def chest():
    return chest_domain(32)


@pytest.fixture(scope="session")
def chest_patterns(chest):
    return pattern_set(32, 0, 1.0, electrode_quadrature(chest).weights)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
