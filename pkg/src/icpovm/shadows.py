"""POVM-based classical-shadow fidelity estimation on dense density matrices.

Each system qubit is measured with its own single-qubit POVM circuit. The
estimator for outcome string ``b`` is ``tr(Psi (x)_i D_{b_i})`` with
``D_b = M^{-1}(Pi_b)`` the inverse-frame snapshot of the ideal POVM.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotIC, SynthesisMismatch, TooLarge, ZeroProbabilityBranch
from .gates import ANCILLA, Circuit, practical_circuit, synthesize, unitary_of
from .noise import NoiseModel, apply_channel, apply_op, thermal_relaxation_channel  # noqa: F401
from .dilation import DilationUnitary, build_dilation
from .optimizer import algo1, find_2cnot_theta
from .operators import CNOT_AS, H, I2, pauli_exp
from .povm import QubitPovm4, SicParams, construct_sic, is_ic, is_sic

MAX_QUBITS = 12
CHUNK = 1 << 16


# --- states ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        d = rho.shape[0]
        if rho.shape != (d, d) or d < 2 or d & (d - 1):
            raise ValueError("density matrix must be 2^N x 2^N")
        if abs(np.trace(rho) - 1) > 1e-9:
            raise ValueError(f"trace {np.trace(rho).real:.12f} differs from 1")
        if np.abs(rho - rho.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.rho.shape[0].bit_length() - 1

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho).min())

    @classmethod
    def pure(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def _check_size(n):
    if not 1 <= n <= MAX_QUBITS:
        raise TooLarge(f"register size {n} outside 1..{MAX_QUBITS}")


def ghz_vector(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def product_vector(psi1, n: int) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for _ in range(n):
        out = np.kron(out, psi1)
    return out


def prepare_ghz(n: int, noise: NoiseModel | None = None) -> DensityState:
    """GHZ state from ``H`` on qubit 0 and a CNOT chain, with per-gate relaxation if ``noise``."""
    _check_size(n)
    if noise is None:
        return DensityState.pure(ghz_vector(n))
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    rho = apply_op(rho, n, [0], H)
    rho = apply_channel(rho, n, [0], noise.channel(0, noise.t_1q))
    for q in range(n - 1):
        rho = apply_op(rho, n, [q, q + 1], CNOT_AS)
        for k in (q, q + 1):
            rho = apply_channel(rho, n, [k], noise.channel(k, noise.t_2q))
    return DensityState(0.5 * (rho + rho.conj().T))


def depolarize(state: DensityState, p: float) -> DensityState:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    d = state.rho.shape[0]
    return DensityState(p * np.eye(d) / d + (1 - p) * state.rho)


def fidelity(state: DensityState, target: DensityState) -> float:
    return float(np.real(np.trace(target.rho @ state.rho)))


# --- measurement ----------------------------------------------------------------------


def pair_channel(circuit: Circuit, noise: NoiseModel | None = None, qubit: int = 0):
    """Superoperator of the (noisy) measurement circuit on (ancilla, system).

    Returns ``S`` of shape (4, 4, 4, 4) with ``rho_out[i, j] = S[i, j, k, l] rho_in[k, l]``,
    including reset and pre-measurement relaxation.
    """
    if noise is None:
        U = unitary_of(circuit)
        return np.einsum("ik,jl->ijkl", U, U.conj())
    basis = np.zeros((4, 4, 4, 4), dtype=complex)
    anc, sysq = noise.ancilla_of(qubit), qubit
    wire_q = {ANCILLA: anc}
    pos = {ANCILLA: 0}
    for k in range(4):
        for l in range(4):
            rho = np.zeros((4, 4), dtype=complex)
            rho[k, l] = 1.0
            rho = apply_channel(rho, 2, [0], noise.channel(anc, noise.t_reset))
            for g in circuit.gates:
                rho = g.embed() @ rho @ g.embed().conj().T
                t = noise.t_2q if g.is_two_qubit else noise.t_1q
                for w in g.wires:
                    p = pos.get(w, 1)
                    rho = apply_channel(rho, 2, [p], noise.channel(wire_q.get(w, sysq), t))
            for p, q in ((0, anc), (1, sysq)):
                rho = apply_channel(rho, 2, [p], noise.channel(q, noise.t_measure))
            basis[:, :, k, l] = rho
    return basis


def effective_povm(circuit: Circuit, noise: NoiseModel | None = None, qubit: int = 0) -> np.ndarray:
    """Elements ``E_b`` (shape (4, 2, 2)) seen by the system, indexed by target outcome."""
    S = pair_channel(circuit, noise, qubit)
    E = np.zeros((4, 2, 2), dtype=complex)
    for k in range(4):
        # ancilla in |0>: input indices (0, x), (0, y); tr(E rho) = sum E[y, x] rho[x, y]
        E[circuit.outcome_map[k]] = S[k, k, :2, :2].T
    return 0.5 * (E + E.conj().transpose(0, 2, 1))


@dataclass(frozen=True, eq=False)
class ShadowRecord:
    outcomes: np.ndarray  # (shots, N) target outcome labels
    povm: QubitPovm4 | None = None

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.int64)
        if out.ndim != 2 or out.size and (out.min() < 0 or out.max() > 3):
            raise ValueError("outcomes must be a (shots, N) array of labels 0..3")
        object.__setattr__(self, "outcomes", out)

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    def flat(self) -> np.ndarray:
        """Outcome strings as base-4 integers (qubit 0 most significant)."""
        n = self.outcomes.shape[1]
        return self.outcomes @ (4 ** np.arange(n - 1, -1, -1))


def measure_povm_sequential(
    state: DensityState,
    circuit: Circuit,
    noise: NoiseModel | None = None,
    rng=None,
    shots: int = 1,
    povm: QubitPovm4 | None = None,
) -> ShadowRecord:
    """Measure qubits one at a time with a fresh ancilla, sampling and collapsing as we go.

    Raises:
        ZeroProbabilityBranch: if the outcome probabilities of a step vanish.
    """
    rng = np.random.default_rng(rng)
    n = state.n
    channels = [pair_channel(circuit, noise, q) for q in range(n)]
    out = np.empty((shots, n), dtype=np.int64)
    for s in range(shots):
        rho = state.rho
        for q in range(n):
            m = n - q
            rest = 2 ** (m - 1)
            # adjoin the ancilla as the most significant qubit and apply the pair channel
            R = rho.reshape(2, rest, 2, rest)
            R4 = np.zeros((4, rest, 4, rest), dtype=complex)
            R4[:2, :, :2, :] = R
            R4 = np.einsum("ijkl,kalb->iajb", channels[q], R4)
            blocks = np.einsum("iaib->iab", R4)
            probs = np.real(np.einsum("iaa->i", blocks))
            probs = np.clip(probs, 0, None)
            total = probs.sum()
            if total < 1e-15:
                raise ZeroProbabilityBranch(f"outcome mass {total:.3e} at qubit {q}")
            k = int(rng.choice(4, p=probs / total))
            out[s, q] = circuit.outcome_map[k]
            rho = blocks[k] / probs[k] if m > 1 else None
    return ShadowRecord(out, povm)


def outcome_distribution(state: DensityState, elements) -> np.ndarray:
    """Joint probabilities ``tr(rho (x)_i E^{(i)}_{b_i})`` as a flat base-4 array.

    ``elements`` is one (4, 2, 2) array per qubit, or a single array shared by all.
    """
    n = state.n
    elements = _per_qubit(elements, n)
    return np.real(_contract(state.rho, n, elements))


def _per_qubit(items, n):
    items = np.asarray(items)
    if items.ndim == 3:
        return [items] * n
    if len(items) != n:
        raise ValueError("need one entry per qubit")
    return list(items)


def _contract(A, n, mats):
    """``tr(A (x)_i M^{(i)}_{b_i})`` for all ``b``: sum over A[r, c] prod_i M_i[b_i, c_i, r_i]."""
    T = A.reshape((2,) * (2 * n))
    for q in range(n):
        # T has axes: (b_0..b_{q-1}, r_q..r_{n-1}, c_q..c_{n-1})
        nr = n - q
        T = np.tensordot(mats[q], T, axes=([2, 1], [q, q + nr]))
        # result axes: (b_q, b_0..b_{q-1}, remaining r, remaining c)
        T = np.moveaxis(T, 0, q)
    return T.reshape(-1)


def sample_outcomes(probs, shots: int, seed=None, n: int | None = None) -> np.ndarray:
    """Draw ``shots`` outcome strings in fixed-size chunks with independent substreams.

    The result depends only on ``(seed, shots)``, not on how chunks are scheduled.
    """
    probs = np.clip(np.asarray(probs, dtype=float), 0, None)
    probs = probs / probs.sum()
    if n is None:
        n = int(round(np.log(len(probs)) / np.log(4)))
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    n_chunks = -(-shots // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    flat = np.empty(shots, dtype=np.int64)
    for i, ss in enumerate(seqs):
        lo, hi = i * CHUNK, min(shots, (i + 1) * CHUNK)
        u = np.random.default_rng(ss).random(hi - lo)
        flat[lo:hi] = np.searchsorted(cdf, u, side="right")
    flat = np.minimum(flat, len(probs) - 1)
    digits = (flat[:, None] // (4 ** np.arange(n - 1, -1, -1))) % 4
    return digits


def measure_povm_joint(
    state: DensityState,
    circuit: Circuit,
    noise: NoiseModel | None = None,
    seed=None,
    shots: int = 1,
    povm: QubitPovm4 | None = None,
) -> ShadowRecord:
    """Same law as :func:`measure_povm_sequential`, sampled from the exact joint distribution."""
    elements = [effective_povm(circuit, noise, q) for q in range(state.n)]
    probs = outcome_distribution(state, elements)
    return ShadowRecord(sample_outcomes(probs, shots, seed, state.n), povm)


# --- estimators -------------------------------------------------------------------------


def snapshot_table(povm: QubitPovm4, closed_form: bool | None = None) -> np.ndarray:
    """Inverse-frame snapshots ``D_b`` with ``sum_b tr(rho Pi_b) D_b = rho``.

    SICs use ``D_b = 3 P_b - I`` with ``P_b = Pi_b / tr(Pi_b)``; other IC
    POVMs invert the frame superoperator ``sum_b |Pi_b>><<Pi_b|``.

    Raises:
        NotIC: if the POVM is not informationally complete.
    """
    if not is_ic(povm):
        raise NotIC("POVM elements do not span the operator space")
    E = povm.elements
    if closed_form is None:
        closed_form = is_sic(povm)
    if closed_form:
        return np.array([3 * e / np.trace(e).real - I2 for e in E])
    vecs = E.reshape(4, 4)
    F = vecs.T @ vecs.conj()
    D = np.linalg.solve(F, vecs.T).T
    return D.reshape(4, 2, 2)


def estimates_by_outcome(target: DensityState, tables) -> np.ndarray:
    """Per-shot estimate ``tr(Psi (x)_i D_{b_i})`` for every outcome string (flat base-4)."""
    n = target.n
    tables = _per_qubit(tables, n)
    return np.real(_contract(target.rho, n, tables))


@dataclass(frozen=True, eq=False)
class FidelityEstimate:
    estimates: np.ndarray

    @property
    def shots(self) -> int:
        return len(self.estimates)

    @property
    def mean(self) -> float:
        return float(np.mean(self.estimates))

    @property
    def sample_variance(self) -> float:
        """Per-shot variance ``s^2``."""
        return float(np.var(self.estimates, ddof=1)) if self.shots > 1 else 0.0

    @property
    def variance(self) -> float:
        """Variance of the mean, ``s^2 / M``."""
        return self.sample_variance / self.shots

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance))

    def mse_vs(self, x: float, n_batches: int = 10) -> float:
        """Mean squared deviation of ``n_batches`` equal batch means from ``x``."""
        m = self.shots // n_batches
        if m == 0:
            return float((self.mean - x) ** 2)
        means = self.estimates[: m * n_batches].reshape(n_batches, m).mean(axis=1)
        return float(np.mean((means - x) ** 2))

    def head(self, shots: int) -> "FidelityEstimate":
        return FidelityEstimate(self.estimates[:shots])


def estimate_fidelity(target: DensityState, record: ShadowRecord, tables) -> FidelityEstimate:
    per_outcome = estimates_by_outcome(target, tables)
    return FidelityEstimate(per_outcome[record.flat()])


def exact_moments(probs, per_outcome) -> tuple[float, float]:
    """Expectation and per-shot variance of the estimator under ``probs``."""
    mean = float(np.dot(probs, per_outcome))
    return mean, float(np.dot(probs, (per_outcome - mean) ** 2))


# --- SIC choice ---------------------------------------------------------------------------


def fig5_state(which: str) -> np.ndarray:
    """Single-qubit states of the SIC-flexibility benchmark: ``"a"`` = |0>, ``"b"`` = U|0>."""
    if which == "a":
        return np.array([1.0, 0.0], dtype=complex)
    if which == "b":
        return pauli_exp([0.0, np.pi / 3, np.pi / 3, np.pi / 3]) @ np.array([1.0, 0.0], dtype=complex)
    raise ValueError(which)


def optimal_sic_for_state(psi1) -> QubitPovm4:
    """SIC with one element orthogonal to ``psi1``: variance-optimal for fidelity to ``psi1``."""
    psi1 = np.asarray(psi1, dtype=complex)
    if abs(np.linalg.norm(psi1) - 1) > 1e-10:
        raise ValueError("state must be normalized")
    # the reference SIC's first element is |0>; point it at -n(psi1)
    psi1 = psi1 * (abs(psi1[0]) / psi1[0] if abs(psi1[0]) > 1e-15 else 1.0)
    theta = 2 * np.arctan2(abs(psi1[1]), abs(psi1[0]))
    phi = float(np.angle(psi1[1])) if abs(psi1[1]) > 1e-15 else 0.0
    return construct_sic(SicParams(theta1=np.pi - theta, phi1=float(np.mod(phi + np.pi, 2 * np.pi)), delta=0.0, c=0))


# --- measurement circuits ------------------------------------------------------------------


def measurement_circuit(target, n_cnot: int) -> Circuit:
    """Measurement circuit for a SIC (given as POVM or dilation) using 1, 2 or 3 CNOTs.

    * 1: practical Bell-basis circuit with classical relabeling.
    * 2: the dilation moved onto the 2-CNOT locus, then synthesized.
    * 3: the dilation synthesized as is (it must need three CNOTs).
    """
    dil = target if isinstance(target, DilationUnitary) else build_dilation(target)
    if n_cnot == 1:
        a1 = algo1(dil)
        return practical_circuit(a1.U_S, a1.c)
    if n_cnot == 2:
        _, moved = find_2cnot_theta(dil)
        return synthesize(moved.U)
    if n_cnot == 3:
        circ = synthesize(dil.U)
        if circ.cnot_count != 3:
            raise SynthesisMismatch(f"dilation needs only {circ.cnot_count} CNOTs")
        return circ
    raise ValueError("n_cnot must be 1, 2 or 3")
