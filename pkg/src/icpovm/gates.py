"""Two-wire circuit IR, single-qubit decompositions and minimal-CNOT synthesis.

Circuits act on the wires ``"ancilla"`` and ``"system"``. Gates are listed
in time order, so ``unitary_of`` multiplies them right to left. The ancilla
is the most significant qubit of every 4x4 matrix.

Gate kinds and their angle tuples:

=========  ==========================  ==========================================
kind       angles                      matrix
=========  ==========================  ==========================================
Rx/Ry/Rz   (t,)                        exp(-i t P / 2)
Phase      (b,)                        diag(1, e^{ib})
X, H       ()                          Pauli X, Hadamard
U2         (alpha, t1, t2, t3)         e^{i alpha} Rz(t1) Ry(t2) Rz(t3)
CNOT       ()                          wires = (control, target)
CRz        (b,)                        diag(1, 1, 1, e^{ib}), symmetric in wires
CU         (alpha, t1, t2, t3)         controlled U2, wires = (control, target)
=========  ==========================  ==========================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.linalg

from . import references
from .equivalence import MAGIC, canonical_vector, cnot_count
from .exceptions import SynthesisMismatch
from .linalg import global_phase_distance, kron_factor, to_su4
from .operators import H, I2, X, Y, Z, phase, rx, ry, rz

ANCILLA, SYSTEM = "ancilla", "system"
WIRES = (ANCILLA, SYSTEM)

ONE_QUBIT = {"Rx": 1, "Ry": 1, "Rz": 1, "Phase": 1, "X": 0, "H": 0, "U2": 4}
TWO_QUBIT = {"CNOT": 0, "CRz": 1, "CU": 4}

SYNTH_TOL = 1e-8


def zyz_matrix(alpha, t1, t2, t3) -> np.ndarray:
    return np.exp(1j * alpha) * rz(t1) @ ry(t2) @ rz(t3)


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple
    angles: tuple = ()

    def __post_init__(self):
        wires = tuple(self.wires) if not isinstance(self.wires, str) else (self.wires,)
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "angles", angles)
        if self.kind in ONE_QUBIT:
            n_wires, n_angles = 1, ONE_QUBIT[self.kind]
        elif self.kind in TWO_QUBIT:
            n_wires, n_angles = 2, TWO_QUBIT[self.kind]
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(wires) != n_wires or any(w not in WIRES for w in wires) or len(set(wires)) != n_wires:
            raise ValueError(f"{self.kind} needs {n_wires} distinct wire(s) from {WIRES}, got {wires}")
        if len(angles) != n_angles:
            raise ValueError(f"{self.kind} takes {n_angles} angle(s), got {len(angles)}")
        if not all(np.isfinite(angles)):
            raise ValueError("gate angles must be finite")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a single-qubit gate, or the target operator of a controlled gate."""
        k, a = self.kind, self.angles
        if k == "Rx":
            return rx(a[0])
        if k == "Ry":
            return ry(a[0])
        if k == "Rz":
            return rz(a[0])
        if k == "Phase":
            return phase(a[0])
        if k in ("X", "CNOT"):
            return X.copy()
        if k == "H":
            return H.copy()
        if k in ("U2", "CU"):
            return zyz_matrix(*a)
        if k == "CRz":
            return phase(a[0])
        raise AssertionError(k)

    def embed(self) -> np.ndarray:
        """4x4 matrix on (ancilla, system)."""
        G = self.matrix()
        if not self.is_two_qubit:
            return np.kron(G, I2) if self.wires[0] == ANCILLA else np.kron(I2, G)
        P0, P1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        if self.wires[0] == ANCILLA:
            return np.kron(P0, I2) + np.kron(P1, G)
        return np.kron(I2, P0) + np.kron(G, P1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "wires": list(self.wires), "angles": list(self.angles)}

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        return cls(data["kind"], tuple(data["wires"]), tuple(data.get("angles", ())))


def u2_gate(U, wire) -> Gate:
    """Generic single-qubit gate holding ``U`` exactly (including global phase)."""
    return Gate("U2", (wire,), decompose_1q(U, "ZYZ"))


def cu_gate(U, control=ANCILLA, target=SYSTEM) -> Gate:
    return Gate("CU", (control, target), decompose_1q(U, "ZYZ"))


@dataclass(frozen=True)
class Circuit:
    """Time-ordered gate list.

    ``outcome_map[k]`` is the target outcome reported when the circuit
    measures computational outcome ``k = 2 b_A + b_S``; it records any
    relabeling deferred to classical post-processing.
    """

    gates: tuple = ()
    outcome_map: tuple = (0, 1, 2, 3)
    wires: tuple = field(default=WIRES)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "outcome_map", tuple(int(i) for i in self.outcome_map))
        if sorted(self.outcome_map) != [0, 1, 2, 3]:
            raise ValueError("outcome_map must be a permutation of 0..3")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, *more) -> "Circuit":
        extra = []
        for m in more:
            extra.extend(m.gates if isinstance(m, Circuit) else [m])
        return Circuit(self.gates + tuple(extra), self.outcome_map)

    @property
    def cnot_count(self) -> int:
        return sum(g.kind == "CNOT" for g in self.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    def to_dict(self) -> dict:
        return {
            "wires": list(self.wires),
            "gates": [g.to_dict() for g in self.gates],
            "outcome_map": list(self.outcome_map),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        try:
            gates = [Gate.from_dict(g) for g in data["gates"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit record: {exc}") from exc
        return cls(tuple(gates), tuple(data.get("outcome_map", (0, 1, 2, 3))))


def unitary_of(circuit: Circuit) -> np.ndarray:
    U = np.eye(4, dtype=complex)
    for g in circuit.gates:
        U = g.embed() @ U
    return U


# --- single-qubit decompositions --------------------------------------------------

# conjugations taking (Rz, Ry) to the requested (n, m) axis pair
_AXIS_FRAMES = {
    "ZYZ": I2,
    "ZXZ": rz(-np.pi / 2),  # y -> x about z
    "XZX": scipy.linalg.expm(-1j * (np.pi / 3) * (X + Y + Z) / np.sqrt(3)),  # x -> y -> z -> x
}


def _zyz(U):
    U = np.asarray(U, dtype=complex)
    V = U / np.sqrt(np.linalg.det(U))
    a, b = V[0, 0], V[1, 0]
    t2 = 2 * np.arctan2(abs(b), abs(a))
    if abs(b) < 1e-12:
        t1, t3 = -2 * np.angle(a), 0.0
    elif abs(a) < 1e-12:
        t1, t3 = 2 * np.angle(b), 0.0
    else:
        s, d = -2 * np.angle(a), 2 * np.angle(b)
        t1, t3 = (s + d) / 2, (s - d) / 2
    R = rz(t1) @ ry(t2) @ rz(t3)
    alpha = np.angle(np.vdot(R.ravel(), U.ravel()))
    return float(alpha), float(t1), float(t2), float(t3)


def decompose_1q(U, axes: str = "ZYZ") -> tuple[float, float, float, float]:
    """Euler angles ``(alpha, t1, t2, t3)`` with ``U = e^{i alpha} R_n(t1) R_m(t2) R_n(t3)``.

    ``axes`` is one of ``"ZYZ"``, ``"ZXZ"``, ``"XZX"``; ``t2`` lies in
    ``[0, pi]`` and ``t3 = 0`` at gimbal lock.
    """
    if axes not in _AXIS_FRAMES:
        raise ValueError(f"unsupported axes {axes!r}")
    C = _AXIS_FRAMES[axes]
    return _zyz(C.conj().T @ np.asarray(U, dtype=complex) @ C)


def euler_matrix(angles, axes: str = "ZYZ") -> np.ndarray:
    C = _AXIS_FRAMES[axes]
    return C @ zyz_matrix(*angles) @ C.conj().T


def decompose_controlled_u(U):
    """Split ``U = e^{i alpha} A X B X C`` with ``A B C = I``.

    Returns ``(A, B, C, alpha)`` with ``A, B, C`` in SU(2).
    """
    alpha, beta, gamma, delta = decompose_1q(U, "ZYZ")
    A = rz(beta) @ ry(gamma / 2)
    B = ry(-gamma / 2) @ rz(-(delta + beta) / 2)
    C = rz((delta - beta) / 2)
    return A, B, C, alpha


def expand_controlled(circuit: Circuit) -> Circuit:
    """Replace every ``CU`` gate by two CNOTs, target rotations and a control phase."""
    out = []
    for g in circuit.gates:
        if g.kind != "CU":
            out.append(g)
            continue
        ctrl, tgt = g.wires
        A, B, C, alpha = decompose_controlled_u(g.matrix())
        out += [
            u2_gate(C, tgt),
            Gate("CNOT", (ctrl, tgt)),
            u2_gate(B, tgt),
            Gate("CNOT", (ctrl, tgt)),
            u2_gate(A, tgt),
            Gate("Phase", (ctrl,), (alpha,)),
        ]
    return Circuit(tuple(out), circuit.outcome_map)


# --- rewrites ---------------------------------------------------------------------


def _commutes_with_cnot(g: Gate, cnot: Gate) -> bool:
    ctrl, tgt = cnot.wires
    return (g.kind == "Rz" and g.wires[0] == ctrl) or (g.kind == "Rx" and g.wires[0] == tgt)


def commute_rz_rx_through_cnot(circuit: Circuit) -> Circuit:
    """Push Rz gates on CNOT controls and Rx gates on CNOT targets later in time.

    Each such rotation is carried past every CNOT it commutes with (and past
    gates on the other wire) until it meets a gate that blocks it.
    """
    gates = list(circuit.gates)
    i = len(gates) - 1
    while i >= 0:
        g = gates[i]
        if g.kind in ("Rz", "Rx"):
            dest = i
            j = i + 1
            while j < len(gates):
                h = gates[j]
                if h.kind == "CNOT" and _commutes_with_cnot(g, h):
                    dest = j
                elif g.wires[0] in h.wires:
                    break
                j += 1
            if dest != i:
                gates.insert(dest, gates.pop(i))
        i -= 1
    return Circuit(tuple(gates), circuit.outcome_map)


def merge_rotations(circuit: Circuit) -> Circuit:
    """Fuse runs of adjacent same-axis rotations on one wire."""
    out: list[Gate] = []
    for g in circuit.gates:
        if out and g.kind in ("Rx", "Ry", "Rz", "Phase"):
            # find the last gate touching this wire
            for j in range(len(out) - 1, -1, -1):
                if g.wires[0] in out[j].wires:
                    break
            else:
                j = None
            if j is not None and out[j].kind == g.kind and out[j].wires == g.wires:
                out[j] = Gate(g.kind, g.wires, (out[j].angles[0] + g.angles[0],))
                continue
        out.append(g)
    return Circuit(tuple(out), circuit.outcome_map)


def fuse_single_qubit(circuit: Circuit) -> Circuit:
    """Collapse every maximal run of single-qubit gates on a wire into one ``U2``."""
    out: list[Gate] = []
    pending = {w: None for w in WIRES}

    def flush(w):
        if pending[w] is not None:
            out.append(u2_gate(pending[w], w))
            pending[w] = None

    for g in circuit.gates:
        if g.is_two_qubit:
            for w in g.wires:
                flush(w)
            out.append(g)
        else:
            w = g.wires[0]
            pending[w] = g.matrix() @ (pending[w] if pending[w] is not None else I2)
    for w in WIRES:
        flush(w)
    return Circuit(tuple(out), circuit.outcome_map)


# --- synthesis ----------------------------------------------------------------------


def _template(n: int, k) -> Circuit:
    k1, k2, k3 = k
    A, S = ANCILLA, SYSTEM
    if n == 0:
        return Circuit()
    if n == 1:
        return Circuit((Gate("CNOT", (A, S)),))
    if n == 2:
        return Circuit(
            (
                Gate("CNOT", (A, S)),
                Gate("Rx", (A,), (-2 * k1,)),
                Gate("Rz", (S,), (-2 * k2,)),
                Gate("CNOT", (A, S)),
            )
        )
    c = -k3
    return Circuit(
        (
            Gate("CNOT", (S, A)),
            Gate("Ry", (S,), (2 * k2 - np.pi / 2,)),
            Gate("CNOT", (A, S)),
            Gate("Rz", (A,), (2 * c - np.pi / 2,)),
            Gate("Ry", (S,), (np.pi / 2 - 2 * k1,)),
            Gate("CNOT", (S, A)),
        )
    )


def _real_orthogonal_eigh(S, seed: int = 0):
    """Diagonalize a complex symmetric unitary with a real orthogonal basis.

    Its real and imaginary parts commute, so a generic real combination of
    them shares their eigenvectors.
    """
    rng = np.random.default_rng(seed)
    best = None
    for attempt in range(64):
        t = 0.6180339887498949 if attempt == 0 else rng.uniform(0, np.pi)
        _, P = np.linalg.eigh(np.cos(t) * S.real + np.sin(t) * S.imag)
        D = np.diag(P.T @ S @ P)
        resid = np.abs(P @ np.diag(D) @ P.T - S).max()
        if best is None or resid < best[0]:
            best = (resid, D, P)
        if resid < 1e-13:
            break
    return best[1], best[2]


def local_equivalence(U, T):
    """Find local ``L1, L2`` and a phase with ``U = phase * L1 @ T @ L2``.

    Returns ``(L1, L2, phase)`` or ``None`` when ``U`` and ``T`` are not
    locally equivalent.
    """
    Uu, _ = to_su4(U)
    Tt, _ = to_su4(T)
    MU = MAGIC.conj().T @ Uu @ MAGIC
    DU, PU = _real_orthogonal_eigh(MU.T @ MU)
    best = None
    for scale in (1.0, 1j):
        MT = scale * MAGIC.conj().T @ Tt @ MAGIC
        DT, PT = _real_orthogonal_eigh(MT.T @ MT)
        for perm in permutations(range(4)):
            err = np.abs(DU - DT[list(perm)]).max()
            if best is None or err < best[0]:
                best = (err, MT, PT[:, list(perm)], scale)
    err, MT, PT, scale = best
    if err > 1e-6:
        return None
    PU = PU.copy()
    O2 = PT @ PU.T
    if np.linalg.det(O2) < 0:
        PU[:, 0] *= -1
        O2 = PT @ PU.T
    O1 = MU @ O2.T @ np.linalg.inv(MT)
    L1 = MAGIC @ O1 @ MAGIC.conj().T
    L2 = MAGIC @ O2 @ MAGIC.conj().T
    dist, ph = global_phase_distance(L1 @ T @ L2, U)
    return L1, L2, ph


def _local_gates(L, phase_factor=1.0):
    A, B = kron_factor(L)
    return [u2_gate(phase_factor * A, ANCILLA), u2_gate(B, SYSTEM)]


def synthesize(U, tol: float = SYNTH_TOL) -> Circuit:
    """Circuit with the minimal number of CNOTs reproducing ``U`` up to global phase.

    Raises:
        SynthesisMismatch: if the assembled circuit misses ``U`` by more than ``tol``.
    """
    U = np.asarray(U, dtype=complex)
    n = cnot_count(U)
    k = canonical_vector(U).as_array()
    core = _template(n, k)
    found = local_equivalence(U, unitary_of(core))
    if found is None:
        raise SynthesisMismatch(f"no local equivalence found for the {n}-CNOT template")
    L1, L2, ph = found
    circ = Circuit(tuple(_local_gates(L2)) + core.gates + tuple(_local_gates(L1, ph)))
    dist, _ = global_phase_distance(unitary_of(circ), U)
    if dist > tol:
        raise SynthesisMismatch(f"synthesized circuit misses target by {dist:.3e}")
    return circ


# --- SIC measurement circuits --------------------------------------------------------

RELABEL_C0 = (0, 1, 3, 2)


def bell_prefix() -> Circuit:
    """CNOT from system to ancilla followed by H on the system."""
    return Circuit((Gate("CNOT", (SYSTEM, ANCILLA)), Gate("H", (SYSTEM,))))


def practical_circuit(U_S, c: int) -> Circuit:
    """One-CNOT SIC measurement: rotate the system, then measure in the fiducial Bell basis.

    For ``c = 0`` the final CNOT of the general circuit is replaced by the
    outcome relabeling recorded in ``outcome_map``.
    """
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    gates = (
        u2_gate(U_S, SYSTEM),
        u2_gate(references.ancilla_prep(), ANCILLA),
    ) + bell_prefix().gates
    return Circuit(gates, RELABEL_C0 if c == 0 else (0, 1, 2, 3))


def general_circuit(U_S, c: int, beta1, beta2, beta3, Q, target=None, tol: float = SYNTH_TOL) -> Circuit:
    """Circuit reproducing a full SIC dilation, free parameters included.

    Raises:
        SynthesisMismatch: if ``target`` is given and differs from the circuit
            unitary by more than ``tol`` after one global-phase alignment.
    """
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    A, S = ANCILLA, SYSTEM
    gates = [
        cu_gate(Q, A, S),
        u2_gate(U_S, S),
        u2_gate(references.ancilla_prep(), A),
        *bell_prefix().gates,
        Gate("Phase", (A,), (beta1,)),
        Gate("Phase", (S,), (beta2,)),
        Gate("CRz", (A, S), (beta3,)),
    ]
    if c == 0:
        gates.append(Gate("CNOT", (A, S)))
    circ = Circuit(tuple(gates))
    if target is not None:
        dist, _ = global_phase_distance(unitary_of(circ), np.asarray(target, dtype=complex))
        if dist > tol:
            raise SynthesisMismatch(f"general circuit misses target by {dist:.3e}")
    return circ
