import numpy as np
import pytest
from scipy.linalg import expm

from qlyap import ControlledSystem
from qlyap.controller import ControllerConfig, FeedbackLaw, control_terms
from qlyap.simulate import (
    AssumptionError,
    SimulationAborted,
    SimulationConfig,
    propagate_step,
    simulate,
    step_doubling_check,
)

from conftest import E, H0, H1, P43, PSI0, PSIF, random_hermitian, random_state


def cfg(gain=0.05, mode="full"):
    return ControllerConfig(P43, PSIF, (gain,), mode=mode)


def test_simulation_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(dt=0)
    with pytest.raises(ValueError):
        SimulationConfig(dt=1.0, t_final=0.5)
    with pytest.raises(ValueError):
        SimulationConfig(record_stride=0)
    assert SimulationConfig(dt=0.01, t_final=1.0).n_steps == 100


def test_propagate_eigenstate(five_level):
    for m in range(5):
        out = propagate_step(five_level, [0.0], E[m], 0.37)
        assert np.allclose(out, np.exp(-1j * H0[m, m] * 0.37) * E[m], atol=1e-14)


def test_propagate_zero_dt(five_level):
    psi = random_state(np.random.default_rng(0), 5)
    assert np.array_equal(propagate_step(five_level, [0.3], psi, 0.0), psi)


def test_propagate_group_property_and_expm():
    rng = np.random.default_rng(1)
    sys = ControlledSystem(random_hermitian(rng, 4), [random_hermitian(rng, 4)], hbar=0.7)
    psi = random_state(rng, 4)
    full = propagate_step(sys, [0.4], psi, 0.3)
    half = propagate_step(sys, [0.4], propagate_step(sys, [0.4], psi, 0.15), 0.15)
    assert np.abs(full - half).max() <= 1e-12
    ref = expm(-1j * (sys.h0 + 0.4 * sys.controls[0]) * 0.3 / 0.7) @ psi
    assert np.abs(full - ref).max() <= 1e-12
    assert abs(np.linalg.norm(full) - 1) <= 1e-12


def test_zero_gain_keeps_populations(five_level):
    traj = simulate(five_level, cfg(0.0), SimulationConfig(dt=0.01, t_final=30.0, record_stride=7), PSI0)
    assert np.all(traj.controls == 0)
    assert np.all(traj.fidelity_to_target == 0)
    assert np.allclose(traj.populations[:, 0], 1, atol=1e-14)


def test_trajectory_invariants(five_level):
    sim = SimulationConfig(dt=0.01, t_final=20.0, record_stride=7)
    traj = simulate(five_level, cfg(), sim, PSI0)
    n = len(traj)
    assert n == 2000 // 7 + 2  # stride records plus the final step
    assert traj.times[-1] == pytest.approx(20.0)
    assert np.all(np.diff(traj.times) > 0)
    for arr in (traj.states, traj.controls, traj.lyapunov, traj.fidelity_to_target):
        assert len(arr) == n
    assert np.abs(np.linalg.norm(traj.states, axis=1) - 1).max() <= 1e-9
    assert traj.lyapunov[0] == pytest.approx(6.3)


def test_records_reproduce_control_law(five_level):
    c = cfg(0.3)
    traj = simulate(five_level, c, SimulationConfig(dt=0.01, t_final=5.0, record_stride=13), PSI0)
    law = FeedbackLaw(c, five_level)
    for psi, u in zip(traj.states, traj.controls):
        assert np.allclose(law.control(psi), u, atol=1e-14)
        assert np.allclose(-0.3 * control_terms(c, five_level, psi), u, atol=1e-14)


def test_drop_target_term_stalls_at_eigenstate(five_level):
    traj = simulate(five_level, cfg(0.5, "drop-target-term"), SimulationConfig(dt=0.01, t_final=50.0), PSI0)
    assert np.abs(traj.controls).max() == 0
    assert traj.fidelity_to_target.max() == 0


def test_determinism(five_level):
    sim = SimulationConfig(dt=0.01, t_final=10.0)
    a = simulate(five_level, cfg(0.2), sim, PSI0)
    b = simulate(five_level, cfg(0.2), sim, PSI0)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.controls, b.controls)


def test_step_doubling_zero_gain(five_level):
    d = step_doubling_check(five_level, cfg(0.0), SimulationConfig(dt=0.05, t_final=40.0), PSI0)
    assert d <= 1e-12


def test_step_doubling_first_order(five_level):
    psi0 = (E[0] + E[2]) / np.sqrt(2)
    ds = [
        step_doubling_check(five_level, cfg(0.2), SimulationConfig(dt=dt, t_final=20.0, record_stride=int(0.1 / dt)), psi0)
        for dt in (0.02, 0.01, 0.005)
    ]
    assert ds[0] > ds[1] > ds[2]
    ratios = [ds[0] / ds[1], ds[1] / ds[2]]
    assert all(1.6 < r < 2.4 for r in ratios), ratios


def test_assumption_failure_raises_unless_overridden():
    sys = ControlledSystem(np.diag([1.0, 2.0, 3.0]), [np.ones((3, 3))])  # equally spaced
    c = ControllerConfig(np.eye(3), [0, 0, 1], (1.0,))
    sim = SimulationConfig(dt=0.1, t_final=1.0)
    with pytest.raises(AssumptionError):
        simulate(sys, c, sim, [1, 0, 0])
    assert len(simulate(sys, c, sim, [1, 0, 0], override_assumptions=True)) == 11


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_non_finite_abort_keeps_last_valid_record():
    sys = ControlledSystem(np.diag([1.0, 2.5]), [np.array([[0, 1], [1, 0]])])
    c = ControllerConfig(np.array([[2.0, 0.5], [0.5, 1.0]]), [0, 1], (1e308,))
    with pytest.raises(SimulationAborted) as info:
        simulate(sys, c, SimulationConfig(dt=0.1, t_final=1.0), [np.sqrt(0.5), np.sqrt(0.5)])
    traj = info.value.trajectory
    assert 0 < len(traj) < 11
    assert np.all(np.isfinite(traj.states))
