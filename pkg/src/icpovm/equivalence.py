"""Local-equivalence invariants of two-qubit unitaries.

Two gates ``U`` and ``(A x B) U (C x D)`` share the spectrum of
``gamma(U) = U (Y x Y) U^T (Y x Y)`` up to the global-phase sign, and the
same Weyl-chamber point ``k`` with ``U ~ exp(i (k1 XX + k2 YY + k3 ZZ))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NotUnitary
from .linalg import eig4, is_unitary, to_su4, unitarity_residual
from .operators import SIGMA_PAIRS, YY

# magic basis: columns are Bell states with phases making local gates real orthogonal
MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)

# eigenvalues of XX, YY, ZZ in the magic basis; rows index the Pauli pair
_SIGNATURES = np.array([np.real(np.diag(MAGIC.conj().T @ P @ MAGIC)) for P in SIGMA_PAIRS])

TOL_1CNOT = 1e-8
TOL_K = 1e-8
CHAMBER_EDGE_TOL = 1e-10


@dataclass(frozen=True)
class CanonicalVector:
    k1: float
    k2: float
    k3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3])

    def scaled(self) -> np.ndarray:
        """Coordinates in units of pi/4."""
        return self.as_array() / (np.pi / 4)

    def core(self) -> np.ndarray:
        return canonical_core(self.as_array())


@dataclass(frozen=True, eq=False)
class GammaInvariant:
    gamma: np.ndarray
    tr_gamma: complex
    tr_gamma_sq: complex
    det_u: complex

    @property
    def chi(self) -> np.ndarray:
        return chi_from_traces(self.tr_gamma, self.tr_gamma_sq, self.det_u)


def _check_unitary(U):
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {U.shape}")
    if not is_unitary(U):
        raise NotUnitary(f"matrix is not unitary (residual {unitarity_residual(U):.3e})")
    return U


def gamma_of(U) -> GammaInvariant:
    U = _check_unitary(U)
    g = U @ YY @ U.T @ YY
    return GammaInvariant(
        gamma=g,
        tr_gamma=complex(np.trace(g)),
        tr_gamma_sq=complex(np.trace(g @ g)),
        det_u=complex(np.linalg.det(U)),
    )


def chi_from_traces(tr_g, tr_g2, det_u) -> np.ndarray:
    """Coefficients of ``det(x I - gamma)`` from highest to lowest degree.

    For unitary ``gamma``, ``det gamma = det(U)^2`` and the cubic coefficient
    follows from ``tr(gamma^{-1}) = conj(tr gamma)``.
    """
    det_g = det_u**2
    return np.array(
        [1.0, -tr_g, 0.5 * (tr_g**2 - tr_g2), -det_g * np.conj(tr_g), det_g], dtype=complex
    )


def chi_coefficients(U) -> np.ndarray:
    return gamma_of(U).chi


def canonical_core(k) -> np.ndarray:
    """``exp(i (k1 XX + k2 YY + k3 ZZ))``."""
    k1, k2, k3 = np.asarray(k, dtype=float)
    return scipy.linalg.expm(1j * sum(kj * P for kj, P in zip((k1, k2, k3), SIGMA_PAIRS)))


def _raw_coordinates(U) -> np.ndarray:
    """Unreduced class coordinates from the spectrum of ``M^T M`` in the magic basis."""
    Usu, _ = to_su4(U)
    M = MAGIC.conj().T @ Usu @ MAGIC
    w, _ = eig4(M.T @ M)
    lam = np.angle(w) / 2
    # eigenphases of an SU(4) element sum to a multiple of pi; unwind to zero
    m = int(round(lam.sum() / np.pi))
    order = np.argsort(-lam)
    if m < 0:
        order = order[::-1]
    for j in range(abs(m)):
        lam[order[j]] -= np.sign(m) * np.pi
    return np.linalg.lstsq(_SIGNATURES.T, lam, rcond=None)[0]


def reduce_to_chamber(k) -> np.ndarray:
    """Move ``k`` into ``pi/4 >= k1 >= k2 >= |k3|`` using locally equivalent moves."""
    k = np.asarray(k, dtype=float).copy()
    k = np.mod(k + np.pi / 4, np.pi / 2) - np.pi / 4
    k = k[np.argsort(-np.abs(k), kind="stable")]
    if k[0] < 0:
        k[0], k[2] = -k[0], -k[2]
    if k[1] < 0:
        k[1], k[2] = -k[1], -k[2]
    if abs(k[0] - np.pi / 4) < CHAMBER_EDGE_TOL:
        # the boundary points (pi/4, k2, k3) and (pi/4, k2, -k3) coincide
        k[0] = np.pi / 4
        k[2] = abs(k[2])
    return k


def canonical_vector(U) -> CanonicalVector:
    U = _check_unitary(U)
    return CanonicalVector(*map(float, reduce_to_chamber(_raw_coordinates(U))))


def is_one_cnot(U, tol: float = TOL_1CNOT) -> bool:
    g = gamma_of(U)
    return abs(g.tr_gamma) < tol and abs(g.tr_gamma_sq + 4 * g.det_u) < tol


def cnot_count(U, tol_1: float = TOL_1CNOT, tol_k: float = TOL_K) -> int:
    """Minimal number of CNOTs needed to implement ``U`` with local gates."""
    k = canonical_vector(U)
    if np.abs(k.as_array()).max() < tol_k:
        return 0
    if is_one_cnot(U, tol_1):
        return 1
    if abs(k.k3) < tol_k:
        return 2
    return 3
