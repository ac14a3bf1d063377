"""Closed-loop Schrödinger integration.

Each step holds the feedback control fixed (evaluated at the start of the
step) and applies the exact propagator exp(-i H(u) dt / hbar), obtained from
an eigendecomposition of H(u). The state therefore stays on the unit sphere
up to rounding, and the only discretization error is the control hold.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import zheev

from .controller import ControllerConfig, FeedbackLaw
from .core import DimensionError, as_state, hermitian_eigendecompose
from .system import ControlledSystem, check_assumptions, hamiltonian_at

log = logging.getLogger(__name__)


class SimulationAborted(RuntimeError):
    """Raised on a non-finite state or control; ``trajectory`` holds the
    records up to the last valid step."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class AssumptionError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 1e-3
    t_final: float = 100.0
    record_stride: int = 1
    renormalize: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, N)
    controls: np.ndarray  # (n, r); control applied from this record on
    lyapunov: np.ndarray
    fidelity_to_target: np.ndarray
    vdot_control: np.ndarray  # control part of dV/dt at each record
    max_vdot_control: float  # over every integration step, not only records

    def __len__(self) -> int:
        return len(self.times)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2


def propagate_step(sys: ControlledSystem, u, psi, dt: float) -> np.ndarray:
    """exp(-i H(u) dt / hbar) psi with H(u) = H0 + sum u_k H_k."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != sys.dim:
        raise DimensionError("state dimension does not match the system")
    if dt == 0:
        return psi.copy()
    w, v = hermitian_eigendecompose(hamiltonian_at(sys, u), method="lapack")
    return v @ (np.exp(-1j * w * (dt / sys.hbar)) * (v.conj().T @ psi))


def simulate(
    sys: ControlledSystem,
    cfg: ControllerConfig,
    sim: SimulationConfig,
    psi0,
    check: bool = True,
    override_assumptions: bool = False,
) -> Trajectory:
    """Integrate the closed loop from ``psi0``.

    Assumption checks run by default and are logged; a failing check raises
    ``AssumptionError`` unless ``override_assumptions`` is set.
    """
    psi = np.array(as_state(psi0))
    if check:
        report = check_assumptions(sys, cfg.target)
        for line in report.lines():
            log.info(line)
        if not report.all_ok:
            if not override_assumptions:
                raise AssumptionError("system assumptions fail:\n" + "\n".join(report.lines()))
            log.warning("assumption checks failed; continuing because of override")

    law = FeedbackLaw(cfg, sys)
    h0 = np.asarray(sys.h0)
    hs = np.array(sys.controls)
    scale = sim.dt / sys.hbar
    target = np.asarray(cfg.target)
    stride = int(sim.record_stride)
    n = sim.n_steps
    n_rec = n // stride + 1 + (1 if n % stride else 0)
    times = np.empty(n_rec)
    states = np.empty((n_rec, sys.dim), dtype=complex)
    controls = np.empty((n_rec, sys.n_controls))
    vdc = np.empty(n_rec)
    max_vdc = -np.inf
    rec = 0

    def trajectory(count):
        st = states[:count].copy()
        return Trajectory(
            times[:count].copy(), st, controls[:count].copy(),
            law.values(st), np.minimum(1.0, np.abs(st @ target.conj())),
            vdc[:count].copy(), float(max_vdc),
        )

    exp = np.exp
    vdot = np.vdot
    sqrt = math.sqrt
    isfinite = math.isfinite
    terms = law.terms
    shape = law.shape
    hflat = hs.reshape(sys.n_controls, -1)
    dim = sys.dim
    inv_hbar = 1.0 / sys.hbar
    phase_scale = -1j * scale
    for step in range(n + 1):
        x = terms(psi, check=False)
        u = shape(x)
        control_part = float(u @ x) * inv_hbar
        norm2 = vdot(psi, psi).real
        if not (isfinite(control_part) and isfinite(norm2)):
            raise SimulationAborted(f"non-finite state or control at step {step}", trajectory(rec))
        if control_part > max_vdc:
            max_vdc = control_part
        if step % stride == 0 or step == n:
            times[rec] = step * sim.dt
            states[rec] = psi
            controls[rec] = u
            vdc[rec] = control_part
            rec += 1
        if step == n:
            break
        w, v, info = zheev(h0 + (u @ hflat).reshape(dim, dim))
        if info != 0:
            raise SimulationAborted(f"eigensolver failed at step {step}", trajectory(rec))
        psi = v @ (exp(phase_scale * w) * (v.conj().T @ psi))
        if sim.renormalize:
            psi /= sqrt(vdot(psi, psi).real)
    return trajectory(rec)


def step_doubling_check(sys: ControlledSystem, cfg: ControllerConfig, sim: SimulationConfig, psi0) -> float:
    """Max distance between runs at ``dt`` and ``dt/2`` over shared record times."""
    coarse = simulate(sys, cfg, sim, psi0, check=False)
    fine_sim = SimulationConfig(sim.dt / 2, sim.t_final, 2 * sim.record_stride, sim.renormalize)
    fine = simulate(sys, cfg, fine_sim, psi0, check=False)
    m = min(len(coarse), len(fine))
    if not np.allclose(coarse.times[:m], fine.times[:m], rtol=0, atol=1e-9 * sim.t_final):
        raise RuntimeError("record times of the two runs do not line up")
    return float(np.linalg.norm(coarse.states[:m] - fine.states[:m], axis=1).max())
