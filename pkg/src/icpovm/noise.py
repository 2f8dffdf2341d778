"""Thermal-relaxation noise and small dense density-matrix kernels.

Qubit 0 is the most significant factor of every register. Noise models
index qubits globally: system qubits ``0 .. n-1`` and their measurement
ancillas ``n .. 2n-1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidTimes

T1_MEAN = 50e-6
T2_MEAN = 50e-6
REL_SIGMA = 0.1
T_1Q = 100e-9
T_2Q = 300e-9
T_MEASURE = 1000e-9
T_RESET = 1000e-9


def thermal_relaxation_channel(t, T1, T2) -> list[np.ndarray]:
    """Kraus operators of amplitude damping toward |0> plus pure dephasing.

    Populations relax with ``1 - exp(-t/T1)`` and coherences decay by
    ``exp(-t/T2)`` overall.

    Raises:
        InvalidTimes: unless ``t > 0`` and ``0 < T2 <= T1``.
    """
    if not (t > 0 and T1 > 0 and 0 < T2 <= T1) or not np.all(np.isfinite([t, T1, T2])):
        raise InvalidTimes(f"need t > 0 and 0 < T2 <= T1 (got t={t}, T1={T1}, T2={T2})")
    gamma = -np.expm1(-t / T1)
    # residual coherence factor after the damping part has contributed exp(-t / 2T1)
    lam = np.exp(-t / T2 + t / (2 * T1))
    pz = 0.5 * (1 - lam)
    damp = [
        np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex),
    ]
    deph = [np.sqrt(1 - pz) * np.eye(2, dtype=complex), np.sqrt(pz) * np.diag([1.0, -1.0]).astype(complex)]
    return [P @ A for P in deph for A in damp]


def kraus_completeness(kraus) -> float:
    S = sum(K.conj().T @ K for K in kraus)
    return float(np.abs(S - np.eye(S.shape[0])).max())


# --- dense kernels -----------------------------------------------------------------


def apply_op(rho, n: int, qubits, op) -> np.ndarray:
    """``op rho op^dagger`` for ``op`` acting on ``qubits`` (first listed = most significant)."""
    k = len(qubits)
    T = rho.reshape((2,) * (2 * n))
    G = np.asarray(op).reshape((2,) * (2 * k))
    # left multiplication on row indices
    T = np.tensordot(G, T, axes=(list(range(k, 2 * k)), list(qubits)))
    T = np.moveaxis(T, list(range(k)), list(qubits))
    # right multiplication by op^dagger on column indices
    cols = [n + q for q in qubits]
    T = np.tensordot(T, G.conj(), axes=(cols, list(range(k, 2 * k))))
    T = np.moveaxis(T, list(range(2 * n - k, 2 * n)), cols)
    return T.reshape(2**n, 2**n)


def apply_channel(rho, n: int, qubits, kraus) -> np.ndarray:
    return sum(apply_op(rho, n, qubits, K) for K in kraus)


# --- noise model --------------------------------------------------------------------


def sample_times(n_qubits: int, rng, t1_mean=T1_MEAN, t2_mean=T2_MEAN, rel_sigma=REL_SIGMA):
    """Per-qubit ``(T1, T2)`` from normal distributions, redrawn until ``0 < T2 <= T1``."""
    T1 = np.empty(n_qubits)
    T2 = np.empty(n_qubits)
    for q in range(n_qubits):
        while True:
            a = rng.normal(t1_mean, rel_sigma * t1_mean)
            b = rng.normal(t2_mean, rel_sigma * t2_mean)
            if 0 < b <= a:
                break
        T1[q], T2[q] = a, b
    return T1, T2


@dataclass(frozen=True, eq=False)
class NoiseModel:
    T1: np.ndarray
    T2: np.ndarray
    t_1q: float = T_1Q
    t_2q: float = T_2Q
    t_measure: float = T_MEASURE
    t_reset: float = T_RESET
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T1 = np.atleast_1d(np.asarray(self.T1, dtype=float))
        T2 = np.atleast_1d(np.asarray(self.T2, dtype=float))
        if T1.shape != T2.shape:
            raise InvalidTimes("T1 and T2 need one entry per qubit")
        if np.any(T2 <= 0) or np.any(T2 > T1):
            raise InvalidTimes("each qubit needs 0 < T2 <= T1")
        if min(self.t_1q, self.t_2q, self.t_measure, self.t_reset) <= 0:
            raise InvalidTimes("gate durations must be positive")
        object.__setattr__(self, "T1", T1)
        object.__setattr__(self, "T2", T2)

    @property
    def n_qubits(self) -> int:
        return len(self.T1)

    @classmethod
    def sample(
        cls,
        n_system: int,
        seed=None,
        t1_mean=T1_MEAN,
        t2_mean=T2_MEAN,
        rel_sigma=REL_SIGMA,
        **durations,
    ) -> "NoiseModel":
        """Draw times for ``n_system`` system qubits and as many ancillas."""
        rng = np.random.default_rng(seed)
        T1, T2 = sample_times(2 * n_system, rng, t1_mean, t2_mean, rel_sigma)
        meta = {"seed": seed, "t1_mean": t1_mean, "t2_mean": t2_mean, "rel_sigma": rel_sigma}
        return cls(T1, T2, meta=meta, **durations)

    def channel(self, qubit: int, t: float):
        return thermal_relaxation_channel(t, self.T1[qubit], self.T2[qubit])

    def ancilla_of(self, system_qubit: int) -> int:
        n = self.n_qubits // 2
        return n + system_qubit

    def to_dict(self) -> dict:
        return {
            "T1": self.T1.tolist(),
            "T2": self.T2.tolist(),
            "t_1q": self.t_1q,
            "t_2q": self.t_2q,
            "t_measure": self.t_measure,
            "t_reset": self.t_reset,
        }

    @classmethod
    def from_dict(cls, data: dict, n_system: int | None = None) -> "NoiseModel":
        """Accept either explicit ``T1``/``T2`` lists or sampling parameters.

        Sampling keys: ``seed``, ``t1_mean``, ``t2_mean``, ``rel_sigma``.
        """
        durations = {k: float(data[k]) for k in ("t_1q", "t_2q", "t_measure", "t_reset") if k in data}
        if "T1" in data:
            return cls(np.asarray(data["T1"], float), np.asarray(data["T2"], float), **durations)
        if n_system is None:
            raise ValueError("sampling a noise model needs the system size")
        return cls.sample(
            n_system,
            seed=data.get("seed"),
            t1_mean=float(data.get("t1_mean", T1_MEAN)),
            t2_mean=float(data.get("t2_mean", T2_MEAN)),
            rel_sigma=float(data.get("rel_sigma", REL_SIGMA)),
            **durations,
        )


def load_noise(path, n_system: int) -> NoiseModel:
    with open(path) as fh:
        return NoiseModel.from_dict(json.load(fh), n_system)
