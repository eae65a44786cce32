import warnings

import numpy as np
import pytest

from arrayscatter import ArrayConfig
from arrayscatter.errors import CriticalEnergyProximity


@pytest.fixture(scope="session")
def cfg():
    """Quarter-wavelength chain with dipoles along the axis."""
    return ArrayConfig(dimension=1, spacing=0.25, polarization="parallel")


@pytest.fixture(scope="session")
def q_gold(cfg):
    return 2.0 / 3.0 * np.pi / cfg.spacing


@pytest.fixture(scope="session")
def cfg_perp():
    return ArrayConfig(dimension=1, spacing=0.2, polarization="perpendicular")


@pytest.fixture(scope="session")
def cfg2d():
    return ArrayConfig(dimension=2, spacing=0.3, polarization="perpendicular")


@pytest.fixture(autouse=True)
def _quiet_critical():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        yield
