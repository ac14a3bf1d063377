"""Dense complex linear algebra and pure-state primitives.

Operators and states are plain numpy arrays. ``as_hermitian`` and ``as_state``
validate and return read-only copies; every other function accepts any array
of the right shape.
"""
from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
from scipy.linalg.lapack import zheev

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-9


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns are orthonormal eigenvectors


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise DimensionError("dimension must be at least 2")
    return m


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as a Hermitian operator and return a symmetrized copy.

    Entries that differ from their mirrored conjugate by at most ``tol`` are
    averaged, which absorbs rounding in hand-written matrices.
    """
    m = as_matrix(a)
    dev = np.abs(m - m.conj().T)
    if dev.max() > tol:
        i, j = np.unravel_index(np.argmax(dev), dev.shape)
        raise NotHermitianError(
            f"matrix is not Hermitian: entry ({i},{j})={m[i, j]} but "
            f"conj of ({j},{i}) is {np.conj(m[j, i])}"
        )
    return _frozen((m + m.conj().T) / 2)


def as_state(v, tol: float = NORM_TOL) -> np.ndarray:
    """Validate ``v`` as a unit-norm complex vector."""
    s = np.asarray(v, dtype=complex)
    if s.ndim != 1 or s.shape[0] < 2:
        raise DimensionError(f"expected a vector of length >= 2, got shape {s.shape}")
    norm = np.linalg.norm(s)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalized: norm = {norm!r}")
    return _frozen(s)


def basis_state(n: int, index: int) -> np.ndarray:
    e = np.zeros(n, dtype=complex)
    e[index] = 1.0
    return e


def _check_dims(*arrays) -> None:
    dims = {a.shape[0] for a in arrays}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")


def inner(a, b) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_dims(a, b)
    return complex(np.vdot(a, b))


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def expectation(op, s, check: bool = True) -> float:
    """<s|op|s> for Hermitian ``op``, returned as a real number."""
    op = np.asarray(op, dtype=complex)
    s = np.asarray(s, dtype=complex)
    _check_dims(op, s)
    if check and np.abs(op - op.conj().T).max() > 1e-10:
        raise NotHermitianError("expectation requires a Hermitian operator")
    val = np.vdot(s, op @ s)
    scale = max(1.0, np.abs(op).max())
    if abs(val.imag) > 1e-10 * scale:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag!r}")
    return float(val.real)


def fidelity(a, b) -> float:
    """|<a|b>|, the global-phase-invariant overlap of two pure states."""
    return min(1.0, abs(inner(a, b)))


def _offdiag_norm(a: np.ndarray) -> float:
    # summing the off-diagonal directly avoids the cancellation of ||A||^2 - ||diag||^2
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(a: np.ndarray, max_sweeps: int) -> Spectrum:
    # Cyclic Jacobi for complex Hermitian matrices. Each (p, q) rotation first
    # removes the phase of a[p, q], then applies the real symmetric rotation.
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g <= 1e-300 or g <= 1e-18 * scale:
                    continue
                phase = apq / g
                app, aqq = a[p, p].real, a[q, q].real
                zeta = (aqq - app) / (2.0 * g)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # U restricted to (p, q): [[c, s], [-s*conj(phase), c*conj(phase)]]
                u_pp, u_pq = c, s
                u_qp, u_qq = -s * np.conj(phase), c * np.conj(phase)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p * u_pp + col_q * u_qp
                a[:, q] = col_p * u_pq + col_q * u_qq
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = np.conj(u_pp) * row_p + np.conj(u_qp) * row_q
                a[q, :] = np.conj(u_pq) * row_p + np.conj(u_qq) * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * u_pp + vq * u_qp
                v[:, q] = vp * u_pq + vq * u_qq
    else:
        off = _offdiag_norm(a)
        if off > 1e-12 * scale:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3e})"
            )
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order], v[:, order])


def hermitian_eigendecompose(a, method: str = "jacobi", max_sweeps: int = 60) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` runs the in-house cyclic Jacobi solver; ``"lapack"``
    calls LAPACK's zheev directly and is used on hot paths.
    """
    m = as_matrix(a)
    if method == "jacobi":
        return _jacobi(m, max_sweeps)
    if method == "lapack":
        w, v, info = zheev(m)
        if info != 0:
            raise ConvergenceError(f"LAPACK zheev failed with info={info}")
        return Spectrum(w, v)
    raise ValueError(f"unknown eigensolver method {method!r}")


def is_positive_definite(a, tol: float = 0.0) -> bool:
    try:
        w = hermitian_eigendecompose(a).eigenvalues
    except (ConvergenceError, DimensionError) as exc:
        log.warning("positive-definiteness test failed: %s", exc)
        return False
    return bool(w[0] > tol)
