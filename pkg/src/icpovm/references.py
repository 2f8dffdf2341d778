"""Fixed reference objects: the Set-1 dilation, the Set-2 fiducial and U_A."""

import numpy as np

from .operators import rx, rz

SQ2, SQ3 = np.sqrt(2.0), np.sqrt(3.0)

# pairwise Bloch angle of SIC elements
SIC_ANGLE = float(np.arccos(-1.0 / 3.0))

# polar angle of the fiducial Bloch vector (1, 1, 1)/sqrt(3)
FIDUCIAL_TILT = float(np.arccos(1.0 / np.sqrt(3.0)))
FIDUCIAL_TWIST = 3 * np.pi / 4


def usic1_matrix(c: int) -> np.ndarray:
    """The reference dilation of the tetrahedral SIC with discrete label ``c``."""
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    s = (-1) ** c
    w = SQ2 / SQ3
    return np.array(
        [
            [1, 0, 1, 0],
            [1 / SQ3, w, -1 / SQ3, w],
            [1 / SQ3, np.exp(1j * s * 2 * np.pi / 3) * w, -1 / SQ3, -np.exp(1j * s * np.pi / 3) * w],
            [1 / SQ3, np.exp(-1j * s * 2 * np.pi / 3) * w, -1 / SQ3, -np.exp(-1j * s * np.pi / 3) * w],
        ],
        dtype=complex,
    ) / SQ2


def set1_kets() -> np.ndarray:
    kets = [np.array([1.0, 0.0], dtype=complex) / SQ2]
    for j in (2, 3, 4):
        kets.append(np.array([1.0, SQ2 * np.exp(2j * np.pi * (j - 2) / 3)]) / np.sqrt(6.0))
    return np.array(kets)


def fiducial_rotation() -> np.ndarray:
    return rz(FIDUCIAL_TWIST) @ rx(FIDUCIAL_TILT)


def set2_fiducial() -> np.ndarray:
    """Normalized fiducial ket generating the Weyl-Heisenberg covariant SIC."""
    return fiducial_rotation()[:, 0]


def ancilla_prep() -> np.ndarray:
    """U_A of the Bell-measurement circuit; prepares the conjugate of the fiducial."""
    return fiducial_rotation().conj()
