"""Fixed-size complex linear algebra used throughout the package.

Only 2x2 and 4x4 matrices (and 4x2 isometries) ever occur, so the helpers
here trade generality for explicit tolerances and deterministic output.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import NoConvergence, NonIsometry, NotUnitary, RankDeficient

UNITARY_TOL = 1e-10
GS_RESIDUAL_TOL = 1e-8


def is_unitary(U, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return bool(np.abs(U.conj().T @ U - np.eye(U.shape[1])).max() < tol)


def unitarity_residual(U) -> float:
    U = np.asarray(U)
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[1])).max())


def complete_to_unitary(V, tol: float = UNITARY_TOL) -> np.ndarray:
    """Extend a 4x2 isometry ``V`` to a 4x4 unitary ``[V W]``.

    ``W`` is built by Gram-Schmidt against the columns of ``V``, trying the
    canonical basis vectors e_0..e_3 in order and skipping any whose residual
    norm falls below 1e-8.

    Raises:
        NonIsometry: if ``V^dagger V`` deviates from the identity.
    """
    V = np.asarray(V, dtype=complex)
    if V.shape != (4, 2):
        raise ValueError(f"expected a 4x2 matrix, got shape {V.shape}")
    dev = np.abs(V.conj().T @ V - np.eye(2)).max()
    if dev > tol:
        raise NonIsometry(f"columns are not orthonormal (deviation {dev:.3e})")

    basis = [V[:, 0], V[:, 1]]
    for e in np.eye(4, dtype=complex):
        # modified Gram-Schmidt, two passes for numerical orthogonality
        r = e.copy()
        for _ in range(2):
            for q in basis:
                r = r - np.vdot(q, r) * q
        norm = np.linalg.norm(r)
        if norm < GS_RESIDUAL_TOL:
            continue
        basis.append(r / norm)
        if len(basis) == 4:
            break
    return np.column_stack(basis)


def _is_normal(M, tol=1e-10) -> bool:
    return bool(np.abs(M @ M.conj().T - M.conj().T @ M).max() < tol * max(1.0, np.abs(M).max() ** 2))


def eig4(M, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a 4x4 complex matrix.

    Eigenvalues are returned sorted by principal phase angle (ascending, in
    (-pi, pi]); ties are broken by modulus. Normal matrices go through the
    complex Schur form so that degenerate eigenspaces still receive an
    orthonormal eigenbasis.

    Returns:
        (eigenvalues, eigenvectors) with ``M @ P[:, j] == w[j] * P[:, j]``.

    Raises:
        NoConvergence: if any eigenpair residual exceeds ``tol``.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != (4, 4) or not np.all(np.isfinite(M)):
        raise ValueError("eig4 expects a finite 4x4 matrix")
    try:
        if _is_normal(M):
            T, Z = scipy.linalg.schur(M, output="complex")
            w, P = np.diag(T).copy(), Z
        else:
            w, P = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc

    # snap -0 angles so that eigenvalue 1 sorts consistently
    ang = np.angle(w)
    ang[np.isclose(ang, -np.pi, atol=1e-12)] = np.pi
    order = np.lexsort((np.abs(w), np.round(ang, 12)))
    w, P = w[order], P[:, order]
    P = P / np.linalg.norm(P, axis=0)

    scale = max(1.0, np.abs(M).max())
    resid = np.abs(M @ P - P * w).max()
    if resid > tol * scale:
        raise NoConvergence(f"eigenpair residual {resid:.3e} exceeds {tol:.1e}")
    return w, P


def pseudo_inverse(W, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a full-column-rank 4x2 matrix.

    Raises:
        RankDeficient: if the smallest singular value is below ``tol``.
    """
    W = np.asarray(W, dtype=complex)
    U, s, Vh = np.linalg.svd(W, full_matrices=False)
    if s.min() < tol:
        raise RankDeficient(f"smallest singular value {s.min():.3e} below {tol:.1e}")
    return (Vh.conj().T / s) @ U.conj().T


def to_su4(U, tol: float = UNITARY_TOL) -> tuple[np.ndarray, float]:
    """Rescale a unitary so that its determinant is one.

    Returns ``(exp(-i phi/4) U, phi)`` with ``phi = arg det U`` on the
    principal branch (-pi, pi].
    """
    U = np.asarray(U, dtype=complex)
    if not is_unitary(U, tol):
        raise NotUnitary(f"matrix is not unitary (residual {unitarity_residual(U):.3e})")
    phi = float(np.angle(np.linalg.det(U)))
    if phi <= -np.pi:
        phi += 2 * np.pi
    return U * np.exp(-1j * phi / U.shape[0]), phi


def global_phase_distance(A, B) -> tuple[float, complex]:
    """Max elementwise distance between ``A`` and ``B`` after aligning one global phase.

    Returns ``(distance, phase)`` where ``phase * A`` is the aligned matrix.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    overlap = np.vdot(A.ravel(), B.ravel())
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.abs(phase * A - B).max()), complex(phase)


def kron_factor(L) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 tensor-product matrix into 2x2 factors ``A (x) B``.

    Both factors are returned in SU(2) whenever ``L`` is in SU(2) x SU(2);
    any leftover scalar is folded into ``A``.
    """
    L = np.asarray(L, dtype=complex)
    blocks = L.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)  # blocks[i, j] = a_ij * B
    norms = np.linalg.norm(blocks, axis=(2, 3))
    i, j = np.unravel_index(np.argmax(norms), norms.shape)
    B = blocks[i, j]
    B = B / np.sqrt(np.linalg.det(B))
    A = np.einsum("ijkl,kl->ij", blocks, B.conj()) / 2.0
    return A, B
