"""CNOT-count reduction for POVM dilations.

* :func:`find_2cnot_theta` moves any dilation onto the 2-CNOT locus ``k3 = 0``
  by tuning one free parameter of ``Q``.
* :func:`sic_1cnot_theta` gives the closed-form 1-CNOT adjustment of the
  tetrahedral reference dilation.
* :func:`algo1` / :func:`algo2` recover the parameters of the Bell-basis
  circuits for an arbitrary SIC dilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dilation import (
    DilationUnitary,
    ThetaDelta,
    apply_theta,
    extract_povm,
    phase_layer,
    u_sic2_reference,
)
from .equivalence import canonical_vector, gamma_of
from .exceptions import NotSic, SearchFailed
from .linalg import pseudo_inverse, to_su4
from .operators import CNOT_AS, CNOT_SA, I2, SWAP, X
from .povm import is_sic

# --- relabeling ----------------------------------------------------------------------

_X_CIRCUITS = {
    1: np.eye(4, dtype=complex),
    2: np.kron(I2, X),
    3: np.kron(X, I2),
    4: np.kron(X, X),
}
_CNOT_CIRCUITS = {
    "a": np.eye(4, dtype=complex),
    "b": CNOT_AS,
    "c": CNOT_SA,
    "d": CNOT_SA @ CNOT_AS,
    "e": CNOT_AS @ CNOT_SA,
    "f": SWAP,
}


@dataclass(frozen=True)
class RelabelCode:
    digit: int
    letter: str

    def __post_init__(self):
        if self.digit not in _X_CIRCUITS or self.letter not in _CNOT_CIRCUITS:
            raise ValueError(f"invalid relabel code {self.digit}{self.letter}")

    @classmethod
    def parse(cls, code: str) -> "RelabelCode":
        code = code.strip()
        if len(code) != 2 or not code[0].isdigit():
            raise ValueError(f"invalid relabel code {code!r}")
        return cls(int(code[0]), code[1].lower())

    def __str__(self):
        return f"{self.digit}{self.letter}"


ALL_CODES = tuple(RelabelCode(d, l) for d in (1, 2, 3, 4) for l in "abcdef")


def relabel_unitary(code) -> np.ndarray:
    """X layer followed by a CNOT layer; acting on ``V`` from the left permutes its rows."""
    if isinstance(code, str):
        code = RelabelCode.parse(code)
    return _CNOT_CIRCUITS[code.letter] @ _X_CIRCUITS[code.digit]


def permutation_string(P) -> str:
    """Row ``k`` of ``P @ V`` is row ``s[k]`` of ``V``; returned 1-based."""
    P = np.asarray(P)
    return "".join(str(int(np.argmax(np.abs(P[k]))) + 1) for k in range(4))


def relabel_table() -> dict:
    return {str(code): permutation_string(relabel_unitary(code)) for code in ALL_CODES}


# --- Proposition 1 search ------------------------------------------------------------

SCAN_POINTS = 64
BISECT_TOL = 1e-12
K3_TOL = 1e-8
SCAN_AXES = (2, 1, 3)  # gamma2, then gamma1, then gamma3


def _delta(axis: int, value: float) -> ThetaDelta:
    v = np.zeros(7)
    v[axis] = value
    return ThetaDelta.from_array(v)


def k3_surrogate(U) -> float:
    """``Im tr gamma`` in the SU(4) gauge; zero wherever ``k3 = 0``."""
    Usu, _ = to_su4(U)
    return float(np.imag(gamma_of(Usu).tr_gamma))


def _bisect(f, a, b, fa, tol=BISECT_TOL):
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def find_2cnot_theta(base, n_scan: int = SCAN_POINTS, k3_tol: float = K3_TOL):
    """Adjust a free parameter so the dilation needs only two CNOTs.

    Scans ``gamma2`` (then ``gamma1``, ``gamma3``) on a uniform grid for a sign
    change of :func:`k3_surrogate`, bisects it, and keeps the first root with
    ``|k3| < k3_tol``.

    Returns:
        ``(theta, adjusted_dilation)``.

    Raises:
        SearchFailed: if no axis yields a root; ``extremes`` maps each scanned
            axis to the surrogate's (min, max).
    """
    if not isinstance(base, DilationUnitary):
        base = DilationUnitary(base)
    if abs(canonical_vector(base.U).k3) < k3_tol:
        return ThetaDelta(), base

    grid = np.linspace(-np.pi, np.pi, n_scan + 1)
    extremes = {}
    for axis in SCAN_AXES:
        def f(x, axis=axis):
            return k3_surrogate(apply_theta(base, _delta(axis, x)).U)

        vals = np.array([f(x) for x in grid])
        extremes[axis] = (float(vals.min()), float(vals.max()))
        for i in range(n_scan):
            a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
            if fa == 0.0:
                root = a
            elif fa * fb < 0:
                root = _bisect(f, a, b, fa)
            else:
                continue
            d = _delta(axis, root)
            U = apply_theta(base, d)
            if abs(canonical_vector(U.U).k3) < k3_tol:
                return d, U
    names = {1: "gamma1", 2: "gamma2", 3: "gamma3"}
    raise SearchFailed(
        "no 2-CNOT crossing found on " + ", ".join(names[a] for a in SCAN_AXES),
        {names[a]: v for a, v in extremes.items()},
    )


# --- SIC closed forms ------------------------------------------------------------------


def sic_1cnot_theta(c: int) -> ThetaDelta:
    """Adjustment taking the tetrahedral reference dilation with label ``c`` to one CNOT."""
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    return ThetaDelta(0.0, np.pi, 0.0, 0.0, 0.0, 0.0, (-1) ** c * np.pi / 2)


@dataclass(frozen=True, eq=False)
class Algo1Result:
    U_S: np.ndarray
    c: int
    alpha11: float
    alpha12: float
    alpha21: float
    alpha22: float
    U_pr: np.ndarray


@dataclass(frozen=True, eq=False)
class Algo2Result:
    beta1: float
    beta2: float
    beta3: float
    Q: np.ndarray


def _orth_complement(phi) -> np.ndarray:
    """Unit vector orthogonal to ``phi``: conjugate, swap, negate; leading entry real >= 0."""
    perp = np.array([-np.conj(phi[1]), np.conj(phi[0])])
    lead = perp[0] if abs(perp[0]) > 1e-14 else perp[1]
    return perp * (abs(lead) / lead) if abs(lead) > 0 else perp


def _frame(V):
    """``U = |phi1><0| + |phi1_perp><1|`` and the phases of ``<phi2| U``."""
    bras = np.sqrt(2.0) * np.asarray(V)
    phi1 = bras[0].conj()
    U = np.column_stack([phi1, _orth_complement(phi1)])
    r = bras[1] @ U
    return U, float(np.angle(r[0])), float(np.angle(r[1]))


DIAGONAL_TOL = 1e-8


def algo1(target, reference=None) -> Algo1Result:
    """Rotation ``U_S`` and label ``c`` placing ``target`` on the Bell-basis circuit.

    Raises:
        NotSic: if the target's POVM is not symmetric.
    """
    if not isinstance(target, DilationUnitary):
        target = DilationUnitary(target)
    ref = reference if reference is not None else u_sic2_reference()
    if not is_sic(extract_povm(target.U)):
        raise NotSic("target dilation does not implement a SIC-POVM")
    V1, V2 = target.V, ref.V
    U1, a11, a12 = _frame(V1)
    U2, a21, a22 = _frame(V2)
    U_r = np.diag([1.0, np.exp(1j * (a12 - a22 - a11 + a21))])
    U_S = U2 @ U_r @ U1.conj().T
    U_pr = V1[2:] @ np.linalg.inv(V2[2:] @ U_S)
    c = 1 if max(abs(U_pr[0, 1]), abs(U_pr[1, 0])) < DIAGONAL_TOL else 0
    return Algo1Result(U_S, c, a11, a12, a21, a22, U_pr)


def algo2(target, a1: Algo1Result | None = None, reference=None) -> Algo2Result:
    """Phase-gate angles and ``Q`` completing the general circuit for ``target``."""
    if not isinstance(target, DilationUnitary):
        target = DilationUnitary(target)
    ref = reference if reference is not None else u_sic2_reference()
    if a1 is None:
        a1 = algo1(target, ref)
    beta2 = a1.alpha11 - a1.alpha21
    beta1 = float(np.angle(a1.U_pr[:, 0].sum()))
    beta3 = float(np.angle(a1.U_pr[:, 1].sum())) - beta1 - beta2
    W2 = phase_layer(beta1, beta2, beta3) @ ref.W @ a1.U_S
    if a1.c == 0:
        W2 = CNOT_AS @ W2
    Q = pseudo_inverse(W2) @ target.W
    return Algo2Result(beta1, beta2, beta3, Q)
