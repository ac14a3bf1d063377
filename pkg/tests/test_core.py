import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlyap.core import (
    ConvergenceError,
    DimensionError,
    NotHermitianError,
    as_hermitian,
    as_state,
    commutator,
    expectation,
    fidelity,
    hermitian_eigendecompose,
    inner,
    is_positive_definite,
)

from conftest import E, H0, P43, PSI0, PSIF, random_hermitian, random_state


def test_inner_basis():
    assert inner(E[0], E[0]) == 1
    assert inner(E[0], E[4]) == 0
    assert inner(PSI0, PSIF) == 0


def test_inner_is_conjugate_linear_in_first_argument():
    a = np.array([1j, 0.0])
    b = np.array([1.0, 0.0])
    assert inner(a, b) == -1j
    assert inner(b, a) == 1j


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner(np.ones(2), np.ones(3))


def test_commutator_examples():
    a = random_hermitian(np.random.default_rng(1), 4)
    assert np.allclose(commutator(a, a), 0)
    assert np.allclose(commutator(H0, np.eye(5)), 0)
    c = commutator(H0, P43)
    assert c[0, 1] == pytest.approx((1.0 - 1.2) * 0.8)
    assert c[0, 1] == pytest.approx(-0.16)
    # diagonal H0: [H0, P]_mj = (lambda_m - lambda_j) P_mj
    lam = np.diag(H0)
    assert np.allclose(c, (lam[:, None] - lam[None, :]) * P43)


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))


def test_expectation_examples():
    assert expectation(H0, E[0]) == 1.0
    psi = random_state(np.random.default_rng(2), 5)
    assert expectation(np.eye(5), psi) == pytest.approx(1.0, abs=1e-14)
    assert expectation(H0, (E[0] + E[1]) / np.sqrt(2)) == pytest.approx(1.1, abs=1e-14)


def test_expectation_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        expectation(np.array([[0, 1], [0, 0]]), np.array([1, 0]))


def test_fidelity_examples():
    psi = random_state(np.random.default_rng(3), 5)
    for phi in (0.3, 1.0, np.pi, -2.0):
        assert fidelity(psi, np.exp(1j * phi) * psi) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(PSI0, PSIF) == 0.0
    assert fidelity((E[0] + E[1]) / np.sqrt(2), E[0]) == pytest.approx(1 / np.sqrt(2), abs=1e-15)


def test_as_hermitian_symmetrizes_small_errors():
    a = np.array([[1.0, 2.0 + 1e-13], [2.0, 3.0]])
    h = as_hermitian(a)
    assert h[0, 1] == h[1, 0]
    with pytest.raises(NotHermitianError, match=r"entry \(0,1\)"):
        as_hermitian(np.array([[1.0, 2.0], [2.1, 3.0]]))


def test_as_state_validates_norm():
    as_state([1, 0, 0])
    with pytest.raises(ValueError):
        as_state([1, 1, 0])


def test_eigendecompose_h0():
    w, v = hermitian_eigendecompose(H0)
    assert np.allclose(w, [1, 1.2, 1.3, 2, 2.15], atol=1e-15)
    assert np.allclose(np.abs(v), np.eye(5))


def test_eigendecompose_identity_and_pauli_x():
    w, _ = hermitian_eigendecompose(np.eye(4))
    assert np.allclose(w, 1)
    w, v = hermitian_eigendecompose(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [-1, 1], atol=1e-15)
    assert np.allclose(np.abs(v), 1 / np.sqrt(2))


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(4)
    for n in (2, 3, 6, 10):
        a = random_hermitian(rng, n)
        wj, _ = hermitian_eigendecompose(a, "jacobi")
        wl, _ = hermitian_eigendecompose(a, "lapack")
        assert np.allclose(wj, wl, atol=1e-12)


def test_jacobi_sweep_budget():
    a = random_hermitian(np.random.default_rng(5), 8)
    with pytest.raises(ConvergenceError):
        hermitian_eigendecompose(a, max_sweeps=1)


def test_is_positive_definite():
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.diag([1.0, -1.0]))
    # Gershgorin: every row of P43 has diagonal > sum of off-diagonal magnitudes
    off = np.abs(P43).sum(axis=1) - np.abs(np.diag(P43))
    assert np.all(np.diag(P43) > off)
    assert is_positive_definite(P43)


hermitian_sizes = st.integers(min_value=2, max_value=10)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(hermitian_sizes, seeds)
def test_eigendecomposition_round_trip(n, seed):
    a = random_hermitian(np.random.default_rng(seed), n)
    w, v = hermitian_eigendecompose(a)
    assert np.all(np.diff(w) >= 0)
    assert np.abs(a - (v * w) @ v.conj().T).max() <= 1e-8
    assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-10
    for i in range(n):
        assert np.linalg.norm(a @ v[:, i] - w[i] * v[:, i]) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(hermitian_sizes, seeds)
def test_commutator_expectation_is_imaginary(n, seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, n), random_hermitian(rng, n)
    c = commutator(a, b)
    assert np.abs(c.conj().T + c).max() <= 1e-10
    psi = random_state(rng, n)
    val = 1j * np.vdot(psi, c @ psi)
    assert abs(val.imag) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(hermitian_sizes, seeds, st.floats(-10, 10), st.floats(-10, 10))
def test_fidelity_phase_invariant(n, seed, alpha, beta):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, n), random_state(rng, n)
    f = fidelity(a, b)
    assert abs(fidelity(np.exp(1j * alpha) * a, np.exp(1j * beta) * b) - f) <= 1e-12
    assert abs(fidelity(b, a) - f) <= 1e-15
