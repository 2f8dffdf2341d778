"""Single- and two-qubit operator constants.

Conventions used everywhere in the package:

* ``rx``, ``ry``, ``rz`` are the SU(2) rotations ``exp(-i t P / 2)``.
* ``phase(b) = diag(1, e^{ib})`` is the phase gate used to adjust row phases
  of a dilation; ``cphase(b) = diag(1, 1, 1, e^{ib})``.
* In two-qubit matrices the ancilla is the most significant qubit, so the
  row index of a dilation unitary is ``2 * b_A + b_S``.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = (I2, X, Y, Z)

# CNOT with the ancilla (MSB) as control, and with the system as control
CNOT_AS = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CNOT_SA = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

XX = np.kron(X, X)
YY = np.kron(Y, Y)
ZZ = np.kron(Z, Z)
SIGMA_PAIRS = (XX, YY, ZZ)


def rx(t):
    return np.cos(t / 2) * I2 - 1j * np.sin(t / 2) * X


def ry(t):
    return np.cos(t / 2) * I2 - 1j * np.sin(t / 2) * Y


def rz(t):
    return np.cos(t / 2) * I2 - 1j * np.sin(t / 2) * Z


def phase(b):
    return np.diag([1.0, np.exp(1j * b)])


def cphase(b):
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * b)])


def controlled(U):
    """Ancilla-controlled ``U`` on the system: ``diag(I, U)``."""
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = U
    return out


def pauli_exp(coeffs):
    """``exp(i sum_j c_j sigma_j)`` for ``coeffs = [c0, c1, c2, c3]`` with sigma_0 = I."""
    c0, c = coeffs[0], np.asarray(coeffs[1:], dtype=float)
    n = np.linalg.norm(c)
    if n == 0:
        return np.exp(1j * c0) * I2
    G = (c[0] * X + c[1] * Y + c[2] * Z) / n
    return np.exp(1j * c0) * (np.cos(n) * I2 + 1j * np.sin(n) * G)


def bloch_vector(ket):
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return np.array([np.real(np.vdot(ket, P @ ket)) for P in (X, Y, Z)])
