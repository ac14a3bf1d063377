"""Residuals of the invariant-set equations and limit classification.

The invariant set of the closed loop is where every control vanishes and the
drift part of dV/dt is zero. Membership is decided by thresholding residuals,
since the defining equations are exact equalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controller import ControllerConfig
from .core import hermitian_eigendecompose
from .design import _drift_basis
from .system import ControlledSystem

MEMBERSHIP_TOL = 1e-6


class WrongCaseError(ValueError):
    pass


@dataclass
class CaseLabel:
    commuting: bool
    commutator_norm: float

    @property
    def label(self) -> str:
        return "commuting" if self.commuting else "non-commuting"

    def __str__(self) -> str:
        return f"{self.label} (max|[H0,P]| = {self.commutator_norm:.6g})"


def classify_case(p, sys: ControlledSystem, tol: float = 1e-10) -> CaseLabel:
    c = sys.h0 @ p - p @ sys.h0
    norm = float(np.abs(c).max())
    return CaseLabel(norm <= tol, norm)


def _wrap(angle):
    # map to (-pi, pi]
    a = np.mod(np.asarray(angle) + np.pi, 2 * np.pi) - np.pi
    return np.where(a == -np.pi, np.pi, a)


@dataclass
class InvariantResidualReport:
    case: CaseLabel
    residuals: dict
    tol: float = MEMBERSHIP_TOL
    not_applicable: list = field(default_factory=list)
    angle_branch: str | None = None

    @property
    def membership(self) -> dict:
        return {
            name: bool(np.all(np.asarray(val) <= self.tol))
            for name, val in self.residuals.items()
            if val is not None
        }

    @property
    def in_invariant_set(self) -> bool:
        return all(self.membership.values())


def case1_residuals(psi, cfg: ControllerConfig, sys: ControlledSystem, tol: float = MEMBERSHIP_TOL) -> InvariantResidualReport:
    """Commuting-P residuals and the phase-angle conditions.

    Keys: ``commutator`` (|<psi|[H_k,P]|psi>| per k), ``im_control_overlap``
    (|Im<psi|H_k|psi_f>| per k), ``im_overlap`` (|Im<psi|psi_f>|) and
    ``angle``. The angle residual compares arg<psi|H_k|psi_f> with
    arg<psi|psi_f> when the plain overlap exceeds ``tol``; otherwise it
    compares the control overlaps' angles pairwise. It is ``None`` when a
    needed overlap is too small to have a defined angle.
    """
    p = cfg.effective_p
    case = classify_case(p, sys)
    if not case.commuting:
        raise WrongCaseError(f"case-I residuals need [H0,P] = 0, got {case}")
    psi = np.asarray(psi, dtype=complex)
    f = np.asarray(cfg.target)
    comm = np.array([abs(np.vdot(psi, (h @ p - p @ h) @ psi)) for h in sys.controls])
    ctrl_ov = np.array([np.vdot(psi, h @ f) for h in sys.controls])
    ov = np.vdot(psi, f)
    na = []
    if abs(ov) > tol:
        branch = "overlap"
        if np.all(np.abs(ctrl_ov) > tol):
            angle = float(np.max(np.abs(_wrap(np.angle(ctrl_ov) - np.angle(ov)))))
        else:
            angle = None
            na.append("angle")
    else:
        branch = "orthogonal"
        if np.all(np.abs(ctrl_ov) > tol):
            a = np.angle(ctrl_ov)
            angle = float(np.max(np.abs(_wrap(a[:, None] - a[None, :]))))
        else:
            angle = None
            na.append("angle")
    report = InvariantResidualReport(
        case,
        {
            "commutator": comm,
            "im_control_overlap": np.abs(ctrl_ov.imag),
            "im_overlap": abs(ov.imag),
            "angle": angle,
        },
        tol,
        na,
        branch,
    )
    return report


def case2_residuals(psi, cfg: ControllerConfig, sys: ControlledSystem, tol: float = MEMBERSHIP_TOL) -> InvariantResidualReport:
    """Residual magnitudes of the four general invariant-set equations."""
    p = cfg.effective_p
    psi = np.asarray(psi, dtype=complex)
    f = np.asarray(cfg.target)
    h0 = sys.h0
    return InvariantResidualReport(
        classify_case(p, sys),
        {
            "drift_commutator": abs(np.vdot(psi, (h0 @ p - p @ h0) @ psi)),
            "control_commutator": np.array(
                [abs(np.vdot(psi, (h @ p - p @ h) @ psi)) for h in sys.controls]
            ),
            "im_drift_target": abs(np.vdot(psi, h0 @ p @ f).imag),
            "im_control_target": np.array([abs(np.vdot(psi, h @ p @ f).imag) for h in sys.controls]),
        },
        tol,
    )


@dataclass
class StructuralReport:
    satisfied: bool
    max_product: float
    products: np.ndarray  # shape (r, N, N); diagonal entries are zero
    violations: list

    def __bool__(self) -> bool:
        return self.satisfied


def case1_structural_condition(cfg: ControllerConfig, sys: ControlledSystem, psi0, tol: float = MEMBERSHIP_TOL) -> StructuralReport:
    """|c_m| |c_j| |<lambda_m|H_k|lambda_j>| for all m != j and every k.

    ``c`` is ``psi0`` expanded on the drift eigenbasis. A commuting-P
    controller can only settle where all these products vanish.
    """
    _, v = _drift_basis(sys)
    c = np.abs(v.conj().T @ np.asarray(psi0, dtype=complex))
    prods = []
    for h in sys.controls:
        he = np.abs(v.conj().T @ h @ v)
        m = np.outer(c, c) * he
        np.fill_diagonal(m, 0.0)
        prods.append(m)
    prods = np.array(prods)
    idx = np.argwhere(prods > tol)
    violations = [(int(k), int(m), int(j)) for k, m, j in idx if m < j]
    return StructuralReport(not violations, float(prods.max()), prods, violations)


def characteristic_period(sys: ControlledSystem) -> float:
    """2 pi hbar over the smallest drift energy gap."""
    w = hermitian_eigendecompose(sys.h0).eigenvalues
    gaps = np.abs(w[:, None] - w[None, :])
    gaps = gaps[gaps > 1e-12]
    return float(2 * np.pi * sys.hbar / gaps.min())


def drift_commutator_residuals(p, sys: ControlledSystem, psi, times) -> np.ndarray:
    """|<psi(t)|[H0,P]|psi(t)>| under free (u = 0) evolution."""
    w, v = hermitian_eigendecompose(sys.h0)
    c = v.conj().T @ np.asarray(psi, dtype=complex)
    comm_e = v.conj().T @ (sys.h0 @ p - p @ sys.h0) @ v
    phases = np.exp(-1j * np.outer(times, w) / sys.hbar)
    ct = phases * c  # eigenbasis coefficients at each time
    vals = np.einsum("ti,ij,tj->t", ct.conj(), comm_e, ct)
    return np.abs(vals)


def theorem2_sampling_oracle(cfg: ControllerConfig, sys: ControlledSystem, psi, samples: int = 256) -> float:
    """Largest |<psi(t)|[H0,P]|psi(t)>| over ``samples`` drift-only times.

    Times are spread uniformly over one period of the slowest beat
    frequency. When P has no vanishing off-diagonal element in the drift
    eigenbasis, this is bounded away from zero unless ``psi`` is a drift
    eigenstate.
    """
    times = np.linspace(0.0, characteristic_period(sys), samples, endpoint=False)
    return float(drift_commutator_residuals(cfg.effective_p, sys, psi, times).max())


@dataclass
class LimitClassification:
    overlaps: np.ndarray
    dominant_index: int  # 0-based drift eigenstate index
    target_fidelity: float


def classify_limit(traj, sys: ControlledSystem, target) -> LimitClassification:
    if len(traj.times) == 0:
        raise ValueError("trajectory is empty")
    _, v = hermitian_eigendecompose(sys.h0)
    final = np.asarray(traj.states[-1])
    overlaps = np.abs(v.conj().T @ final) ** 2
    return LimitClassification(
        overlaps,
        int(np.argmax(overlaps)),
        float(min(1.0, abs(np.vdot(final, np.asarray(target))))),
    )
