import numpy as np
import pytest
from scipy.stats import unitary_group


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def haar_unitary(n, rng):
    return unitary_group.rvs(n, random_state=rng)


def random_su2(rng):
    U = haar_unitary(2, rng)
    return U / np.sqrt(np.linalg.det(U))


def random_ket(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_density(n, rng):
    d = 2**n
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)
