import numpy as np
import pytest

from isac_coverage.geometry import ArrayGeometry
from isac_coverage.scenario import Scenario


@pytest.fixture
def reference_scenario():
    """8x8 arrays and the reference constants."""
    return Scenario()


@pytest.fixture
def desk_scenario():
    """4x4 arrays on a 9x9 grid."""
    return Scenario(tx_array=ArrayGeometry(4, 4), rx_array=ArrayGeometry(4, 4), grid_counts=(9, 9))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
