import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlyap import ControlledSystem
from qlyap.controller import ControllerConfig
from qlyap.invariant import (
    WrongCaseError,
    case1_residuals,
    case1_structural_condition,
    case2_residuals,
    characteristic_period,
    classify_case,
    classify_limit,
    drift_commutator_residuals,
    theorem2_sampling_oracle,
)
from qlyap.simulate import SimulationConfig, simulate

from conftest import E, H0, H1, P43, PSI0, PSIF, random_hermitian, random_pd, random_state

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def cfg43(p=P43, target=PSIF):
    return ControllerConfig(p, target, (1.0,))


def toy3():
    h1 = np.ones((3, 3)) - np.eye(3)
    sys = ControlledSystem(np.diag([1.0, 2.0, 3.5]), [h1])
    cfg = ControllerConfig(np.diag([1.0, 2.0, 3.0]), [0, 0, 1], (1.0,))
    return sys, cfg


def test_classify_case(five_level):
    c = classify_case(P43, five_level)
    assert not c.commuting
    assert c.commutator_norm >= 0.08
    assert "non-commuting" in str(c)
    assert classify_case(np.eye(5), five_level).commuting
    assert classify_case(np.diag([1.0, 2, 3, 4, 5]), five_level).commuting


def test_case1_requires_commuting(five_level):
    with pytest.raises(WrongCaseError):
        case1_residuals(PSI0, cfg43(), five_level)


def test_case1_at_target():
    sys, cfg = toy3()
    rep = case1_residuals(cfg.target, cfg, sys)
    r = rep.residuals
    assert r["commutator"] == pytest.approx([0.0], abs=1e-15)
    assert r["im_control_overlap"] == pytest.approx([0.0], abs=1e-15)
    assert r["im_overlap"] == 0


def test_case1_phase_rotated_target():
    sys, cfg = toy3()
    rep = case1_residuals(1j * cfg.target, cfg, sys)
    assert rep.residuals["im_overlap"] == pytest.approx(1.0)
    assert not rep.membership["im_overlap"]
    assert not rep.in_invariant_set


def eq28_double_sum(h0, p, hk, psi0, t):
    """sum_{m,j} c_m* c_j (p_j - p_m) e^{i(lambda_m - lambda_j) t} <lambda_m|H_k|lambda_j>."""
    lam, v = np.linalg.eigh(h0)
    c = v.conj().T @ psi0
    pe = np.diag(v.conj().T @ p @ v).real
    he = v.conj().T @ hk @ v
    total = 0.0
    for m in range(len(lam)):
        for j in range(len(lam)):
            total += np.conj(c[m]) * c[j] * (pe[j] - pe[m]) * np.exp(1j * (lam[m] - lam[j]) * t) * he[m, j]
    return total


def test_case1_toy_matches_double_sum():
    sys, cfg = toy3()
    e = np.eye(3)
    psi = (e[0] + e[1]) / np.sqrt(2)
    rep = case1_residuals(psi, cfg, sys)
    expected = abs(eq28_double_sum(sys.h0, cfg.p, sys.controls[0], psi, 0.0))
    assert rep.residuals["commutator"][0] == pytest.approx(expected, abs=1e-14)
    # real amplitudes: the (1,2) and (2,1) terms cancel
    assert expected == pytest.approx(0.0, abs=1e-14)
    assert rep.angle_branch == "orthogonal"

    psi = (e[0] + 1j * e[1]) / np.sqrt(2)
    got = case1_residuals(psi, cfg, sys).residuals["commutator"][0]
    # c1* c2 (p2 - p1) H12 + c2* c1 (p1 - p2) H21 = i/2 + i/2
    assert got == pytest.approx(abs(eq28_double_sum(sys.h0, cfg.p, sys.controls[0], psi, 0.0)), abs=1e-14)
    assert got == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_case1_commutator_equals_double_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    lam = np.sort(rng.uniform(0, 4, n))
    h0 = (q * lam) @ q.conj().T
    p = (q * rng.uniform(0.2, 3, n)) @ q.conj().T
    hk = random_hermitian(rng, n)
    sys = ControlledSystem(h0, [hk])
    cfg = ControllerConfig(p, q[:, 0], (1.0,))
    psi0 = random_state(rng, n)
    w, v = np.linalg.eigh(h0)
    for t in np.linspace(0, 10, 50):
        psi_t = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi0))
        direct = case1_residuals(psi_t, cfg, sys).residuals["commutator"][0]
        assert abs(direct - abs(eq28_double_sum(h0, p, hk, psi0, t))) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(0, 2 * np.pi))
def test_commutator_residuals_phase_invariant(seed, phi):
    rng = np.random.default_rng(seed)
    n = 4
    sys = ControlledSystem(random_hermitian(rng, n), [random_hermitian(rng, n)])
    cfg = ControllerConfig(random_pd(rng, n), random_state(rng, n), (1.0,))
    psi = random_state(rng, n)
    a = case2_residuals(psi, cfg, sys).residuals
    b = case2_residuals(np.exp(1j * phi) * psi, cfg, sys).residuals
    assert abs(a["drift_commutator"] - b["drift_commutator"]) <= 1e-12
    assert np.abs(a["control_commutator"] - b["control_commutator"]).max() <= 1e-12


def test_case2_at_target_and_eigenstates(five_level):
    cfg = cfg43()
    assert case2_residuals(PSIF, cfg, five_level).residuals["drift_commutator"] <= 1e-14
    for m in range(5):
        assert case2_residuals(E[m], cfg, five_level).residuals["drift_commutator"] <= 1e-14


def test_case2_two_level_superposition_nonzero(five_level):
    psi = (E[0] + E[1]) / np.sqrt(2)
    times = np.linspace(0, characteristic_period(five_level), 256, endpoint=False)
    r = drift_commutator_residuals(P43, five_level, psi, times)
    # two-term closed form: |(lambda1 - lambda2) P12 (e^{..} - e^{-..})| / 2
    expected = np.abs(0.2 * 0.8 * np.sin(0.2 * times))
    assert np.allclose(r, expected, atol=1e-12)
    assert r.max() > 0.1


def test_structural_condition(five_level):
    cfg = ControllerConfig(np.eye(5), PSIF, (1.0,))
    assert case1_structural_condition(cfg, five_level, PSI0).satisfied
    s = case1_structural_condition(cfg, five_level, (E[0] + E[3]) / np.sqrt(2))
    assert not s
    assert s.products[0, 0, 3] == pytest.approx(0.5)
    assert (0, 0, 3) in s.violations
    # support {e1, e2}: H1 has no coupling inside the block
    assert case1_structural_condition(cfg, five_level, (E[0] + E[1]) / np.sqrt(2)).satisfied


def test_characteristic_period(five_level):
    assert characteristic_period(five_level) == pytest.approx(2 * np.pi / 0.1)


def test_theorem2_oracle_examples(five_level):
    cfg = cfg43()
    for m in range(5):
        assert theorem2_sampling_oracle(cfg, five_level, E[m]) <= 1e-10
    psi = (E[0] + E[4]) / np.sqrt(2)
    amp = 0.5 * abs(H0[4, 4] - H0[0, 0]) * abs(P43[0, 4]) * 2
    assert amp == pytest.approx(0.345)
    got = theorem2_sampling_oracle(cfg, five_level, psi)
    assert got <= amp + 1e-12
    assert got >= amp * np.cos(np.pi / 256)
    uniform = np.ones(5) / np.sqrt(5)
    assert theorem2_sampling_oracle(cfg, five_level, uniform) > 1e-3


def test_classify_limit(five_level):
    cfg = ControllerConfig(P43, PSIF, (0.0,))
    traj = simulate(five_level, cfg, SimulationConfig(dt=0.05, t_final=20.0), PSI0)
    lim = classify_limit(traj, five_level, PSIF)
    assert np.allclose(lim.overlaps, [1, 0, 0, 0, 0], atol=1e-14)
    assert lim.dominant_index == 0
    assert lim.target_fidelity == 0
    assert abs(lim.overlaps.sum() - 1) <= 1e-8

    class Ending:
        times = np.array([0.0])
        states = np.array([np.exp(0.3j) * PSIF])

    lim = classify_limit(Ending, five_level, PSIF)
    assert np.allclose(lim.overlaps, [0, 0, 0, 0, 1])
    assert lim.target_fidelity == pytest.approx(1.0)

    class Empty:
        times = np.array([])
        states = np.zeros((0, 5))

    with pytest.raises(ValueError):
        classify_limit(Empty, five_level, PSIF)
