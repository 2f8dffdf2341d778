"""Neumark dilations of four-outcome qubit POVMs.

Row ``2 * b_A + b_S`` of a dilation unitary ``U`` is the bra of the POVM
element measured as outcome ``(b_A, b_S)`` when the ancilla starts in |0>,
so only the first two columns (``V``) are physical. The last two columns
(``W``) and the row phases form the free parameters adjusted by
:func:`apply_theta`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import references
from .exceptions import IncompletePovm, NotUnitary
from .linalg import complete_to_unitary, is_unitary, unitarity_residual
from .operators import CNOT_SA, H, I2, controlled, cphase, phase, rx, rz
from .povm import COMPLETENESS_TOL, QubitPovm4, validate

THETA_NAMES = ("gamma0", "gamma1", "gamma2", "gamma3", "beta1", "beta2", "beta3")


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(y <= -np.pi, y + 2 * np.pi, y)


@dataclass(frozen=True)
class ThetaDelta:
    """Free-parameter adjustment ``[g0 g1 g2 g3 b1 b2 b3]``."""

    gamma0: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma3: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("theta components must be finite")

    @classmethod
    def from_array(cls, values) -> "ThetaDelta":
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (7,):
            raise ValueError("expected 7 components")
        return cls(*map(float, values))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in THETA_NAMES], dtype=float)

    def normalized(self) -> "ThetaDelta":
        return ThetaDelta.from_array(wrap_angle(self.as_array()))

    def q(self) -> np.ndarray:
        """``Q = e^{i g0} Rx(g1) Rz(g2) Rx(g3)``."""
        return np.exp(1j * self.gamma0) * rx(self.gamma1) @ rz(self.gamma2) @ rx(self.gamma3)

    def u_ph(self) -> np.ndarray:
        return phase_layer(self.beta1, self.beta2, self.beta3)

    def to_dict(self) -> dict:
        return {n: float(getattr(self, n)) for n in THETA_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "ThetaDelta":
        return cls(**{n: float(data.get(n, 0.0)) for n in THETA_NAMES})


def phase_layer(b1, b2, b3) -> np.ndarray:
    """``C_Rz(b3) (Rz(b1) x Rz(b2))`` in the row-phase convention ``diag(1, e^{ib})``."""
    return cphase(b3) @ np.kron(phase(b1), phase(b2))


@dataclass(frozen=True, eq=False)
class DilationUnitary:
    U: np.ndarray
    beta0: float = field(default=0.0, compare=False)

    def __post_init__(self):
        U = np.array(self.U, dtype=complex)
        if U.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {U.shape}")
        if not is_unitary(U):
            raise NotUnitary(f"dilation is not unitary (residual {unitarity_residual(U):.3e})")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @property
    def V(self) -> np.ndarray:
        return self.U[:, :2]

    @property
    def W(self) -> np.ndarray:
        return self.U[:, 2:]

    def povm(self) -> QubitPovm4:
        return extract_povm(self.U)


def build_V(povm: QubitPovm4, tol: float = COMPLETENESS_TOL) -> np.ndarray:
    """Stack the bras ``<phi_i|`` as the rows of a 4x2 isometry.

    Raises:
        IncompletePovm: if the elements do not sum to the identity.
    """
    resid = validate(povm)
    if resid >= tol:
        raise IncompletePovm(f"elements do not sum to identity (residual {resid:.3e})")
    return povm.kets.conj().copy()


def build_dilation(povm: QubitPovm4) -> DilationUnitary:
    return DilationUnitary(complete_to_unitary(build_V(povm), tol=1e-9))


def extract_povm(U) -> QubitPovm4:
    """POVM measured by ``U`` with the ancilla prepared in |0>.

    Raises:
        NotUnitary: if ``U`` is not unitary within 1e-10.
    """
    if isinstance(U, DilationUnitary):
        U = U.U
    U = np.asarray(U, dtype=complex)
    if not is_unitary(U):
        raise NotUnitary(f"matrix is not unitary (residual {unitarity_residual(U):.3e})")
    return QubitPovm4(U[:, :2].conj())


def apply_theta(base, d: ThetaDelta) -> DilationUnitary:
    """``U_ph U C_Q``: adjust row phases and the ``W`` block without touching ``V``."""
    U = base.U if isinstance(base, DilationUnitary) else np.asarray(base, dtype=complex)
    out = d.u_ph() @ U @ controlled(d.q())
    beta0 = base.beta0 if isinstance(base, DilationUnitary) else 0.0
    return DilationUnitary(out, beta0=beta0)


def u_sic1_reference(c: int) -> DilationUnitary:
    return DilationUnitary(references.usic1_matrix(c))


def bell_measurement_unitary() -> np.ndarray:
    """``(I x H) CNOT (U_A x I)``: fiducial prep on the ancilla followed by a Bell measurement."""
    return np.kron(I2, H) @ CNOT_SA @ np.kron(references.ancilla_prep(), I2)


def u_sic2_reference() -> DilationUnitary:
    """Dilation of the Weyl-Heisenberg covariant SIC realized by the Bell-measurement circuit."""
    return DilationUnitary(bell_measurement_unitary())


# --- JSON -------------------------------------------------------------------------


def matrix_to_list(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_list(data, shape=None) -> np.ndarray:
    try:
        M = np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed complex matrix: {exc}") from exc
    if shape is not None and M.shape != shape:
        raise ValueError(f"expected shape {shape}, got {M.shape}")
    return M


def dilation_to_dict(dil: DilationUnitary, theta: ThetaDelta | None = None) -> dict:
    out = {"unitary": matrix_to_list(dil.U)}
    if theta is not None:
        out["theta"] = theta.to_dict()
    return out


def dilation_from_dict(data: dict) -> tuple[DilationUnitary, ThetaDelta | None]:
    if not isinstance(data, dict) or "unitary" not in data:
        raise ValueError("dilation record needs a 'unitary' field")
    U = matrix_from_list(data["unitary"], shape=(4, 4))
    theta = ThetaDelta.from_dict(data["theta"]) if data.get("theta") is not None else None
    return DilationUnitary(U), theta
