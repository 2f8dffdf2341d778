"""Single-qubit, four-outcome, rank-1 POVMs.

A POVM is stored as four subnormalized kets ``|phi_i>`` with elements
``Pi_i = |phi_i><phi_i|``. Constructors return kets whose leading amplitude
is real and non-negative; row phases of a dilation carry no physical
meaning, so every equality check in the package compares elements rather
than kets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import references
from .exceptions import DegenerateElement, IncompletePovm, NotFiducial
from .operators import I2, X, Z, ry, rz

IC_RANK_TOL = 1e-8
COMPLETENESS_TOL = 1e-9
SIC_TOL = 1e-9
SIC_ANGLE = references.SIC_ANGLE


def canonical_phase(ket):
    """Rotate the global phase of ``ket`` so its first nonzero amplitude is real positive."""
    ket = np.asarray(ket, dtype=complex)
    for amp in ket:
        if abs(amp) > 1e-14:
            return ket * (abs(amp) / amp)
    return ket


@dataclass(frozen=True, eq=False)
class QubitPovm4:
    kets: np.ndarray

    def __post_init__(self):
        kets = np.array(self.kets, dtype=complex)
        if kets.shape != (4, 2):
            raise ValueError(f"expected four 2-component kets, got shape {kets.shape}")
        if not np.all(np.isfinite(kets)):
            raise ValueError("kets must be finite")
        kets.setflags(write=False)
        object.__setattr__(self, "kets", kets)

    @property
    def elements(self) -> np.ndarray:
        return np.einsum("ia,ib->iab", self.kets, self.kets.conj())

    @property
    def weights(self) -> np.ndarray:
        """``a_i^2 = tr(Pi_i)``."""
        return np.sum(np.abs(self.kets) ** 2, axis=1)

    def canonical(self) -> "QubitPovm4":
        return QubitPovm4(np.array([canonical_phase(k) for k in self.kets]))

    def permuted(self, order) -> "QubitPovm4":
        return QubitPovm4(self.kets[list(order)])

    def __repr__(self):
        return f"QubitPovm4(weights={np.round(self.weights, 6).tolist()})"


def validate(povm: QubitPovm4) -> float:
    """Completeness residual ``max |sum_i Pi_i - I|``."""
    return float(np.abs(povm.elements.sum(axis=0) - I2).max())


def frame_matrix(povm: QubitPovm4) -> np.ndarray:
    """4x4 matrix whose rows are ``vec(Pi_i)^dagger`` (row-major vectorization)."""
    return povm.elements.reshape(4, 4).conj()


def is_ic(povm: QubitPovm4, tol: float = IC_RANK_TOL) -> bool:
    s = np.linalg.svd(frame_matrix(povm), compute_uv=False)
    return bool(np.sum(s > tol) == 4)


def overlap_matrix(povm: QubitPovm4) -> np.ndarray:
    """Hilbert-Schmidt overlaps ``tr(Pi_i^dagger Pi_j)``."""
    E = povm.elements.reshape(4, 4)
    return np.real(E.conj() @ E.T)


def sic_residual(povm: QubitPovm4) -> float:
    target = (2 * np.eye(4) + 1) / 12.0
    return float(np.abs(overlap_matrix(povm) - target).max())


def is_sic(povm: QubitPovm4, tol: float = SIC_TOL) -> bool:
    return sic_residual(povm) < tol


def same_elements(p: QubitPovm4, q: QubitPovm4, tol: float = 1e-9) -> bool:
    """True when ``p`` and ``q`` have equal elements in the same order."""
    return bool(np.abs(p.elements - q.elements).max() < tol)


def element_permutation(p: QubitPovm4, q: QubitPovm4, tol: float = 1e-9):
    """Return ``perm`` with ``p.Pi[perm[i]] == q.Pi[i]``, or ``None`` if the sets differ."""
    Ep, Eq = p.elements, q.elements
    for perm in permutations(range(4)):
        if np.abs(Ep[list(perm)] - Eq).max() < tol:
            return perm
    return None


def label_string(perm) -> str:
    """Render a 0-based permutation as a 1-based label string such as ``'1243'``."""
    return "".join(str(i + 1) for i in perm)


# --- Bloch-cone parameterization -------------------------------------------------


def eta_vectors(povm: QubitPovm4) -> np.ndarray:
    """``eta_i = a_i^2 [cos t, sin t cos f, sin t sin f]`` for kets ``a (cos t/2, e^{-if} sin t/2)``."""
    out = np.zeros((4, 3))
    for i, ket in enumerate(povm.kets):
        a = np.linalg.norm(ket)
        if a < 1e-15:
            continue
        k = canonical_phase(ket) / a
        theta = 2 * np.arctan2(abs(k[1]), abs(k[0]))
        phi = -np.angle(k[1]) if abs(k[1]) > 1e-15 else 0.0
        out[i] = a**2 * np.array([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)])
    return out


def _ket_from_eta(eta):
    w = np.linalg.norm(eta)
    n = eta / w
    theta = np.arccos(np.clip(n[0], -1.0, 1.0))
    phi = np.arctan2(n[2], n[1])
    return np.sqrt(w) * np.array([np.cos(theta / 2), np.exp(-1j * phi) * np.sin(theta / 2)])


def construct_from_eta(etas) -> QubitPovm4:
    """Close three eta vectors into a valid four-element rank-1 POVM.

    The fourth vector is ``-(eta_1 + eta_2 + eta_3)`` and the polygon is
    rescaled so that the weights ``a_i^2`` sum to two.

    Raises:
        DegenerateElement: if any rescaled weight is below 1e-12.
    """
    etas = np.asarray(etas, dtype=float)
    if etas.shape != (3, 3):
        raise ValueError("expected three 3-vectors")
    full = np.vstack([etas, -etas.sum(axis=0)])
    norms = np.linalg.norm(full, axis=1)
    total = norms.sum()
    if total < 1e-300:
        raise DegenerateElement("all eta vectors vanish")
    full = full * (2.0 / total)
    weights = norms * (2.0 / total)
    if weights.min() < 1e-12:
        raise DegenerateElement(f"element {int(np.argmin(weights)) + 1} has weight {weights.min():.3e}")
    return QubitPovm4(np.array([_ket_from_eta(e) for e in full]))


# --- SIC constructions ----------------------------------------------------------


@dataclass(frozen=True)
class SicParams:
    theta1: float = 0.0
    phi1: float = 0.0
    delta: float = 0.0
    c: int = 0

    def __post_init__(self):
        if self.c not in (0, 1):
            raise ValueError("c must be 0 or 1")

    def rotation(self) -> np.ndarray:
        """``U_S = R_z(phi1) R_y(theta1) R_z(delta)``."""
        return rz(self.phi1) @ ry(self.theta1) @ rz(self.delta)


def reference_kets(c: int) -> np.ndarray:
    """Kets realized by the rows of the tetrahedral reference dilation."""
    V = references.usic1_matrix(c)[:, :2]
    return V.conj()


def construct_sic(params: SicParams) -> QubitPovm4:
    U_S = params.rotation()
    kets = reference_kets(params.c) @ U_S.T
    return QubitPovm4(kets).canonical()


def displacement(k: int, l: int) -> np.ndarray:
    """Qubit Weyl displacement ``tau^{kl} X^k Z^l`` with ``tau = -e^{i pi / 2}``."""
    tau = -np.exp(1j * np.pi / 2)
    return tau ** (k * l) * np.linalg.matrix_power(X, k) @ np.linalg.matrix_power(Z, l)


WH_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))


def wh_covariant_sic(fiducial) -> QubitPovm4:
    """Displacement orbit ``(1/sqrt 2) D_kl |f>`` of a normalized fiducial.

    Raises:
        NotFiducial: if the orbit violates the SIC overlap conditions.
    """
    f = np.asarray(fiducial, dtype=complex)
    if abs(np.linalg.norm(f) - 1.0) > 1e-10:
        raise ValueError("fiducial must be normalized")
    povm = QubitPovm4(np.array([displacement(k, l) @ f for k, l in WH_ORDER]) / np.sqrt(2))
    resid = sic_residual(povm)
    if resid >= SIC_TOL:
        raise NotFiducial(f"displacement orbit is not symmetric (residual {resid:.3e})", resid)
    return povm


def reference_set(which: str) -> QubitPovm4:
    """The two standard qubit SICs: ``"set1"`` (tetrahedral) and ``"set2"`` (WH covariant)."""
    key = str(which).lower().replace(" ", "").replace("_", "")
    if key == "set1":
        return QubitPovm4(references.set1_kets())
    if key == "set2":
        return wh_covariant_sic(references.set2_fiducial())
    raise ValueError(f"unknown reference set {which!r}")


# --- JSON -------------------------------------------------------------------------


def povm_to_dict(povm: QubitPovm4) -> dict:
    return {"kets": [[[float(z.real), float(z.imag)] for z in ket] for ket in povm.kets]}


def povm_from_dict(data: dict, tol: float = COMPLETENESS_TOL) -> QubitPovm4:
    """Parse ``{"kets": [[[re, im], [re, im]], ...]}`` and check completeness.

    Raises:
        ValueError: on malformed input.
        IncompletePovm: if the elements do not sum to the identity.
    """
    try:
        kets = np.array([[complex(re, im) for re, im in ket] for ket in data["kets"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed POVM record: {exc}") from exc
    povm = QubitPovm4(kets)
    resid = validate(povm)
    if resid >= tol:
        raise IncompletePovm(f"elements do not sum to identity (residual {resid:.3e})")
    return povm


def load_povm(path) -> QubitPovm4:
    with open(path) as fh:
        return povm_from_dict(json.load(fh))
