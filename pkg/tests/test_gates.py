import json

import numpy as np
import pytest

from icpovm.dilation import (
    ThetaDelta,
    apply_theta,
    extract_povm,
    u_sic1_reference,
    u_sic2_reference,
)
from icpovm.equivalence import canonical_core, cnot_count
from icpovm.exceptions import NotUnitary, SynthesisMismatch
from icpovm.gates import (
    ANCILLA,
    SYSTEM,
    Circuit,
    Gate,
    bell_prefix,
    commute_rz_rx_through_cnot,
    cu_gate,
    decompose_1q,
    decompose_controlled_u,
    euler_matrix,
    expand_controlled,
    fuse_single_qubit,
    general_circuit,
    merge_rotations,
    practical_circuit,
    synthesize,
    unitary_of,
)
from icpovm.linalg import global_phase_distance, unitarity_residual
from icpovm.operators import CNOT_AS, H, X, Z, controlled, rx
from icpovm.optimizer import algo1, algo2, sic_1cnot_theta
from icpovm.povm import element_permutation, label_string, reference_set
from icpovm.serialization import dumps

from conftest import haar_unitary, random_su2


def mapped_elements(circuit):
    """Elements measured by ``circuit``, reordered into target labels."""
    E = extract_povm(unitary_of(circuit)).elements
    out = np.empty_like(E)
    for k in range(4):
        out[circuit.outcome_map[k]] = E[k]
    return out


def test_unitary_of_basics():
    assert np.allclose(unitary_of(Circuit()), np.eye(4))
    assert np.allclose(unitary_of(Circuit((Gate("CNOT", (ANCILLA, SYSTEM)),))), CNOT_AS)


def test_bell_prefix_maps_phi_plus():
    phi_plus = np.array([1, 0, 0, 1]) / np.sqrt(2)
    out = unitary_of(bell_prefix()) @ phi_plus
    assert np.allclose(np.abs(out), [1, 0, 0, 0])


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("Rx", (ANCILLA,), ())
    with pytest.raises(ValueError):
        Gate("CNOT", (ANCILLA, ANCILLA))
    with pytest.raises(ValueError):
        Gate("Foo", (ANCILLA,))
    with pytest.raises(ValueError):
        Gate("Rz", (SYSTEM,), (np.inf,))


def test_decompose_1q_examples():
    assert np.allclose(decompose_1q(np.eye(2)), 0, atol=1e-12)
    a, t1, t2, t3 = decompose_1q(rx(0.7), "XZX")
    assert np.allclose([a, t1, t2, t3], [0, 0.7, 0, 0], atol=1e-12)
    assert np.abs(euler_matrix(decompose_1q(H, "ZXZ"), "ZXZ") - H).max() < 1e-12


@pytest.mark.parametrize("axes", ["ZYZ", "ZXZ", "XZX"])
def test_decompose_1q_reconstructs(axes, rng):
    for _ in range(200):
        U = haar_unitary(2, rng)
        ang = decompose_1q(U, axes)
        assert 0 <= ang[2] <= np.pi
        assert np.abs(euler_matrix(ang, axes) - U).max() < 1e-10


def test_decompose_1q_gimbal_lock():
    for U in (np.diag([1, 1j]), X, np.exp(0.3j) * Z):
        ang = decompose_1q(U)
        assert ang[3] == 0.0
        assert np.abs(euler_matrix(ang) - U).max() < 1e-10


def check_abc(U):
    A, B, C, alpha = decompose_controlled_u(U)
    assert np.abs(A @ B @ C - np.eye(2)).max() < 1e-10
    assert np.abs(np.exp(1j * alpha) * A @ X @ B @ X @ C - U).max() < 1e-10
    for M in (A, B, C):
        assert abs(np.linalg.det(M) - 1) < 1e-10
    return A, B, C, alpha


def test_controlled_decomposition_examples(rng):
    A, B, C, alpha = check_abc(np.eye(2))
    assert np.allclose(A, np.eye(2)) and np.allclose(B, np.eye(2)) and np.allclose(C, np.eye(2))
    assert abs(alpha) < 1e-12
    check_abc(Z)
    for _ in range(50):
        check_abc(ThetaDelta.from_array(rng.uniform(-np.pi, np.pi, 7)).q())


def test_expand_controlled(rng):
    Q = haar_unitary(2, rng)
    circ = Circuit((cu_gate(Q),))
    assert np.abs(unitary_of(circ) - controlled(Q)).max() < 1e-10
    exp = expand_controlled(circ)
    assert exp.cnot_count == 2
    assert np.abs(unitary_of(exp) - controlled(Q)).max() < 1e-10


def test_commute_examples():
    a = 0.37
    c = Circuit((Gate("Rz", (ANCILLA,), (a,)), Gate("CNOT", (ANCILLA, SYSTEM))))
    out = commute_rz_rx_through_cnot(c)
    assert [g.kind for g in out] == ["CNOT", "Rz"]
    assert np.abs(unitary_of(out) - unitary_of(c)).max() < 1e-12
    c = Circuit((Gate("Rx", (SYSTEM,), (a,)), Gate("CNOT", (ANCILLA, SYSTEM))))
    out = commute_rz_rx_through_cnot(c)
    assert [g.kind for g in out] == ["CNOT", "Rx"]
    assert np.abs(unitary_of(out) - unitary_of(c)).max() < 1e-12
    # blocked: Rx on the control does not move
    c = Circuit((Gate("Rx", (ANCILLA,), (a,)), Gate("CNOT", (ANCILLA, SYSTEM))))
    assert [g.kind for g in commute_rz_rx_through_cnot(c)] == ["Rx", "CNOT"]


def test_controlled_q_merge_pattern(rng):
    g0, g1, g2, g3 = rng.uniform(-np.pi, np.pi, 4)
    A, S = ANCILLA, SYSTEM
    # C_Q with Q = e^{i g0} Rx(g1) Rz(g2) Rx(g3), its Rx pieces placed around the CNOT pair
    c = Circuit(
        (
            Gate("Rx", (S,), (g3,)),
            Gate("Rz", (S,), (g2 / 2,)),
            Gate("CNOT", (A, S)),
            Gate("Rz", (S,), (-g2 / 2,)),
            Gate("CNOT", (A, S)),
            Gate("Rx", (S,), (g1,)),
            Gate("Phase", (A,), (g0,)),
            Gate("Rx", (S,), (0.4,)),
        )
    )
    out = merge_rotations(commute_rz_rx_through_cnot(c))
    assert len(out) < len(c)
    assert global_phase_distance(unitary_of(out), unitary_of(c))[0] < 1e-10


def test_fuse_single_qubit_preserves_unitary(rng):
    c = Circuit(
        (
            Gate("H", (SYSTEM,)),
            Gate("Rx", (SYSTEM,), (0.2,)),
            Gate("CNOT", (ANCILLA, SYSTEM)),
            Gate("Ry", (ANCILLA,), (0.5,)),
            Gate("Rz", (ANCILLA,), (-1.1,)),
        )
    )
    out = fuse_single_qubit(c)
    assert len(out) == 3
    assert np.abs(unitary_of(out) - unitary_of(c)).max() < 1e-10


def test_synthesize_examples(rng):
    assert synthesize(CNOT_AS).cnot_count == 1
    L = np.kron(random_su2(rng), random_su2(rng))
    assert synthesize(L).cnot_count == 0
    U = u_sic1_reference(0).U
    circ = synthesize(U)
    assert circ.cnot_count == 3
    assert global_phase_distance(unitary_of(circ), U)[0] < 1e-8


def test_synthesize_matches_classes(rng):
    def dress(U):
        return np.kron(random_su2(rng), random_su2(rng)) @ U @ np.kron(random_su2(rng), random_su2(rng))

    cases = [dress(CNOT_AS), dress(canonical_core([0.6, 0.3, 0.0])), haar_unitary(4, rng)]
    for U in cases * 20:
        circ = synthesize(U)
        n = cnot_count(U)
        assert circ.cnot_count == n
        assert global_phase_distance(unitary_of(circ), U)[0] < 1e-8
        assert unitarity_residual(unitary_of(circ)) < 1e-10
        assert synthesize(unitary_of(circ)).cnot_count == n


def test_synthesize_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        synthesize(np.ones((4, 4)))


def test_practical_circuit_set2_identity():
    a1 = algo1(u_sic2_reference())
    assert a1.c == 1
    assert global_phase_distance(a1.U_S, np.eye(2))[0] < 1e-10
    circ = practical_circuit(a1.U_S, a1.c)
    assert circ.two_qubit_count == 1
    assert np.abs(mapped_elements(circ) - reference_set("set2").elements).max() < 1e-9


def test_practical_circuit_set1_c0():
    target = u_sic1_reference(0)
    a1 = algo1(target)
    assert a1.c == 0
    circ = practical_circuit(a1.U_S, a1.c)
    assert np.abs(mapped_elements(circ) - target.povm().elements).max() < 1e-9
    raw = extract_povm(unitary_of(circ))
    assert label_string(element_permutation(raw, target.povm())) == "1243"


def test_general_circuit_cases(rng):
    targets = [
        u_sic2_reference(),
        apply_theta(u_sic1_reference(1), sic_1cnot_theta(1)),
        apply_theta(u_sic1_reference(0), ThetaDelta.from_array(rng.uniform(-np.pi, np.pi, 7))),
    ]
    for t in targets:
        a1 = algo1(t)
        a2 = algo2(t, a1)
        circ = general_circuit(a1.U_S, a1.c, a2.beta1, a2.beta2, a2.beta3, a2.Q, target=t.U)
        assert global_phase_distance(unitary_of(circ), t.U)[0] < 1e-8


def test_general_circuit_raises_on_mismatch():
    with pytest.raises(SynthesisMismatch):
        general_circuit(np.eye(2), 1, 0.3, 0, 0, np.eye(2), target=u_sic2_reference().U)


def test_circuit_json_roundtrip():
    a1 = algo1(u_sic1_reference(0))
    circ = practical_circuit(a1.U_S, a1.c)
    back = Circuit.from_dict(json.loads(dumps(circ.to_dict())))
    assert back == circ
    with pytest.raises(ValueError):
        Circuit.from_dict({"gates": [{"wires": []}]})
