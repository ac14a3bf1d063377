"""Construction of the positive-definite weight operator P.

Two regimes matter for the closed loop: P sharing the drift eigenbasis
(``build_commuting_p``) and P whose off-diagonal elements in that basis are
all nonzero (``check_offdiagonal_condition``, ``generate_random_p``). The
latter confines the invariant set to drift eigenstates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_hermitian, hermitian_eigendecompose, is_positive_definite
from .system import ControlledSystem


class DegenerateSpectrumError(ValueError):
    pass


def _drift_basis(sys: ControlledSystem, tol: float = 1e-9):
    w, v = hermitian_eigendecompose(sys.h0)
    if np.any(np.diff(w) <= tol):
        raise DegenerateSpectrumError(
            "drift Hamiltonian has repeated eigenvalues; its eigenbasis is not unique"
        )
    return w, v


def _positive(eigenvalues, n: int) -> np.ndarray:
    p = np.asarray(eigenvalues, dtype=float).reshape(-1)
    if p.shape[0] != n:
        raise ValueError(f"need {n} eigenvalues, got {p.shape[0]}")
    if np.any(~(p > 0)):
        raise ValueError("eigenvalues of P must be strictly positive")
    return p


def build_commuting_p(sys: ControlledSystem, eigenvalues) -> np.ndarray:
    """P = sum_i p_i |lambda_i><lambda_i| on the drift eigenbasis (ascending energies)."""
    _, v = _drift_basis(sys)
    p = _positive(eigenvalues, sys.dim)
    return as_hermitian((v * p) @ v.conj().T, tol=1e-10)


def orthonormalize(vectors, tol: float = 1e-10) -> np.ndarray:
    """Sequential Gram-Schmidt in the given order; columns of the result."""
    vs = [np.asarray(x, dtype=complex).reshape(-1) for x in vectors]
    q = []
    for i, x in enumerate(vs):
        y = x.copy()
        for _ in range(2):  # second pass for numerical orthogonality
            for b in q:
                y = y - np.vdot(b, y) * b
        norm = np.linalg.norm(y)
        if norm <= tol * max(1.0, np.linalg.norm(x)):
            raise ValueError(f"eigenvector {i} is linearly dependent on the previous ones")
        q.append(y / norm)
    return np.array(q).T


def build_spectral_p(eigenvectors, eigenvalues) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize P = Q diag(p) Q^dagger from (possibly non-orthogonal) vectors.

    Returns ``(P, Q)`` where ``Q`` holds the orthonormalized vectors actually
    used, so the caller can see how far they moved from the input.
    """
    q = orthonormalize(eigenvectors)
    if q.shape[0] != q.shape[1]:
        raise ValueError("need exactly N eigenvectors of length N")
    p = _positive(eigenvalues, q.shape[0])
    return as_hermitian((q * p) @ q.conj().T, tol=1e-10), q


@dataclass
class OffdiagonalReport:
    satisfied: bool
    min_magnitude: float
    argmin: tuple
    tol: float

    def __bool__(self) -> bool:
        return self.satisfied


def check_offdiagonal_condition(p, sys: ControlledSystem, tol: float | None = None) -> OffdiagonalReport:
    """Every <lambda_m|P|lambda_j>, m != j, must exceed ``tol`` in magnitude.

    ``tol`` defaults to 1e-6 * max|P_ij|.
    """
    p = as_hermitian(p)
    _, v = _drift_basis(sys)
    pe = v.conj().T @ p @ v
    if tol is None:
        tol = 1e-6 * float(np.abs(p).max())
    mag = np.abs(pe)
    np.fill_diagonal(mag, np.inf)
    i, j = np.unravel_index(np.argmin(mag), mag.shape)
    m = float(mag[i, j])
    return OffdiagonalReport(bool(m > tol), m, (int(i), int(j)), float(tol))


class RetryBudgetExceeded(RuntimeError):
    pass


def generate_random_p(
    sys: ControlledSystem,
    seed: int,
    min_offdiag: float = 0.1,
    min_eigenvalue: float = 0.1,
    max_tries: int = 100,
) -> np.ndarray:
    """Random positive-definite P with no vanishing off-diagonal element in the
    drift eigenbasis. Deterministic in ``seed``."""
    if min_offdiag < 0 or not min_eigenvalue > 0:
        raise ValueError("min_offdiag must be >= 0 and min_eigenvalue > 0")
    _, v = _drift_basis(sys)
    n = sys.dim
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(max_tries):
        m = np.zeros((n, n), dtype=complex)
        mags = min_offdiag + rng.uniform(0.1, 1.0, size=len(iu[0]))
        phases = rng.uniform(0, 2 * np.pi, size=len(iu[0]))
        m[iu] = mags * np.exp(1j * phases)
        m = m + m.conj().T
        m[np.diag_indices(n)] = rng.uniform(0.0, 1.0, size=n)
        lo = np.linalg.eigvalsh(m)[0]
        if lo <= min_eigenvalue:
            # shifting by a multiple of I leaves the off-diagonals untouched
            m[np.diag_indices(n)] += abs(lo) + 2 * min_eigenvalue
        p = as_hermitian(v @ m @ v.conj().T, tol=1e-10)
        if is_positive_definite(p, min_eigenvalue) and check_offdiagonal_condition(p, sys, tol=min_offdiag):
            return p
    raise RetryBudgetExceeded(f"no admissible P found in {max_tries} draws")
