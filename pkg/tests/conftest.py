import random

import numpy as np
import pytest

from encctl.elgamal import keygen, make_keys
from encctl.simulator import PlantModel

PLANT_A = np.array([[1.0, 0.5], [0.0, -1.2]])
PLANT_B = np.array([[0.0], [1.0]])
GAMMA_C = 1e-6
TAU_C = 1.5768e9
UPSILON = 4.42e17


@pytest.fixture
def keys11():
    """p = 11, q = 5, g = 3, s = 2 (so h = 9)."""
    return make_keys(5, 3, 2)


@pytest.fixture(scope="session")
def keys32():
    return keygen(32, random.Random(32))


@pytest.fixture(scope="session")
def keys256():
    return keygen(256, random.Random(256))


@pytest.fixture(scope="session")
def keys512():
    return keygen(512, random.Random(512))


@pytest.fixture
def unstable_plant():
    return PlantModel(PLANT_A, PLANT_B, np.eye(2))


def random_schur(rng, n, radius=0.95):
    M = rng.standard_normal((n, n))
    rho = max(abs(np.linalg.eigvals(M)))
    return M * (radius * rng.uniform(0.1, 1.0) / rho)
