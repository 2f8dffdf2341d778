import numpy as np
import pytest

from icpovm.dilation import apply_theta, u_sic1_reference
from icpovm.equivalence import (
    canonical_core,
    canonical_vector,
    chi_coefficients,
    cnot_count,
    gamma_of,
    reduce_to_chamber,
)
from icpovm.exceptions import NotUnitary
from icpovm.linalg import to_su4
from icpovm.operators import CNOT_AS, CNOT_SA, SWAP, Y
from icpovm.optimizer import sic_1cnot_theta

from conftest import haar_unitary, random_su2

YY = np.kron(Y, Y)


def faddeev_leverrier(M):
    """Coefficients of det(xI - M), highest power first."""
    n = M.shape[0]
    coeffs = [1.0 + 0j]
    Mk = np.zeros_like(M)
    for k in range(1, n + 1):
        Mk = M @ Mk + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(M @ Mk) / k)
    return np.array(coeffs)


def gamma_direct(U):
    return U @ YY @ U.T @ YY


def chi_distance(a, b):
    """Distance up to the SU(4) branch ambiguity U -> iU, which sends gamma to -gamma."""
    flip = np.array([1, -1, 1, -1, 1])
    return min(np.abs(a - b).max(), np.abs(a - flip * b).max())


def dress(U, rng):
    L = np.kron(random_su2(rng), random_su2(rng))
    R = np.kron(random_su2(rng), random_su2(rng))
    return L @ U @ R


def test_gamma_identity():
    g = gamma_of(np.eye(4))
    assert np.allclose(g.gamma, np.eye(4)) and np.isclose(g.tr_gamma, 4)


def test_gamma_phased_cnot():
    g = gamma_of(np.exp(1j * np.pi / 4) * CNOT_AS)
    assert abs(g.tr_gamma) < 1e-12
    assert abs(g.tr_gamma_sq + 4) < 1e-12


def test_gamma_swap_against_oracle():
    Usu, _ = to_su4(SWAP)
    g = gamma_of(Usu)
    oracle = faddeev_leverrier(gamma_direct(Usu))
    assert np.isclose(g.tr_gamma, -oracle[1])
    assert np.abs(g.chi - oracle).max() < 1e-12


def test_gamma_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        gamma_of(np.ones((4, 4)))


def test_chi_matches_two_oracles(rng):
    for _ in range(1000):
        Usu, _ = to_su4(haar_unitary(4, rng))
        chi = chi_coefficients(Usu)
        G = gamma_direct(Usu)
        assert np.abs(chi - faddeev_leverrier(G)).max() < 1e-7
        assert np.abs(chi - np.poly(G)).max() < 1e-7


def test_chi_local_invariance(rng):
    for _ in range(200):
        U, _ = to_su4(haar_unitary(4, rng))
        assert np.abs(chi_coefficients(dress(U, rng)) - chi_coefficients(U)).max() < 1e-8


def test_canonical_vector_examples():
    assert np.abs(canonical_vector(CNOT_AS).as_array() - [np.pi / 4, 0, 0]).max() < 1e-10
    assert np.abs(canonical_vector(CNOT_SA).as_array() - [np.pi / 4, 0, 0]).max() < 1e-10
    assert np.abs(canonical_vector(np.eye(4)).as_array()).max() < 1e-12
    assert abs(canonical_vector(u_sic1_reference(0).U).k3) > 1e-3
    assert np.allclose(canonical_vector(SWAP).as_array(), [np.pi / 4] * 3)


def in_chamber(k, tol=1e-12):
    k1, k2, k3 = k
    ok = np.pi / 4 + tol >= k1 >= k2 - tol and k2 + tol >= abs(k3)
    if abs(k1 - np.pi / 4) < 1e-10:
        ok = ok and k3 >= -tol
    return ok


def test_chamber_and_reconstruction(rng):
    for _ in range(1000):
        U = haar_unitary(4, rng)
        k = canonical_vector(U)
        assert in_chamber(k.as_array())
        Usu, _ = to_su4(U)
        assert chi_distance(chi_coefficients(k.core()), chi_coefficients(Usu)) < 1e-7


def test_local_invariance_of_canonical_vector(rng):
    for _ in range(1000):
        U = haar_unitary(4, rng)
        a = canonical_vector(U).as_array()
        b = canonical_vector(dress(U, rng) * np.exp(1j * rng.uniform(0, 2 * np.pi))).as_array()
        assert np.abs(a - b).max() < 1e-7


def test_reduce_to_chamber_fixed_points(rng):
    for _ in range(200):
        k = reduce_to_chamber(rng.uniform(-3, 3, 3))
        assert in_chamber(k)
        assert np.allclose(reduce_to_chamber(k), k)
        # shifting by pi/2 along an axis is a local operation
        assert np.allclose(reduce_to_chamber(k + [np.pi / 2, 0, 0]), k)


def test_cnot_count_classes(rng):
    assert cnot_count(CNOT_AS) == 1
    assert cnot_count(np.eye(4)) == 0
    assert cnot_count(np.kron(random_su2(rng), random_su2(rng))) == 0
    assert cnot_count(u_sic1_reference(0).U) == 3
    assert cnot_count(SWAP) == 3
    for c in (0, 1):
        assert cnot_count(apply_theta(u_sic1_reference(c), sic_1cnot_theta(c)).U) == 1
    assert cnot_count(canonical_core([0.5, 0.2, 0.0])) == 2
    assert cnot_count(canonical_core([0.5, 0.2, 0.1])) == 3


def test_one_cnot_implies_cnot_point(rng):
    for _ in range(100):
        U = dress(CNOT_AS, rng)
        assert cnot_count(U) == 1
        assert np.abs(canonical_vector(U).as_array() - [np.pi / 4, 0, 0]).max() < 1e-6


def test_tolerance_overrides():
    U = canonical_core([np.pi / 4, 1e-3, 0])
    assert cnot_count(U) == 2
    assert cnot_count(U, tol_1=1e-2) == 1
    assert cnot_count(canonical_core([0.3, 0.2, 1e-5]), tol_k=1e-4) == 2
