import numpy as np
import pytest

from framehydro.constitutive import ViscousParams
from framehydro.elastic_energy import ElasticParams
from framehydro.spectral_grid import Grid

# a generic anisotropic constant set: every gamma-group minimum is attained
# at a different slot and all remainders k_i, k_ij are nontrivial
GENERIC_K = np.array([1.3, 0.7, 1.1, 0.9, 1.8, 0.6, 1.2, 1.0, 0.8, 1.5, 0.95, 1.25])


@pytest.fixture(scope="session")
def grid32():
    return Grid((32, 32))


@pytest.fixture(scope="session")
def grid48():
    return Grid((48, 48))


@pytest.fixture(scope="session")
def grid64():
    return Grid((64, 64))


@pytest.fixture(scope="session")
def grid3d():
    return Grid((24, 24, 24))


@pytest.fixture(scope="session")
def ep_generic():
    return ElasticParams(GENERIC_K)


@pytest.fixture(scope="session")
def ep_iso():
    return ElasticParams.isotropic(1.0)


@pytest.fixture(scope="session")
def vp_default():
    return ViscousParams.default()
