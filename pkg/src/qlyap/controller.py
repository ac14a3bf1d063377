"""Tracking-error Lyapunov function, its time derivative and the feedback law.

The Lyapunov function is V = <psi - psi_f| P |psi - psi_f> and the feedback is

    u_k = -K_k f_k( i<psi|[H_k, P]|psi> + 2 Im<psi|H_k P|psi_f> )

with odd, sign-preserving f_k. Two reduced parameterizations are available
through ``ControllerConfig.mode``:

* ``"identity-p-half"`` replaces P by I/2;
* ``"drop-target-term"`` removes every term involving psi_f, leaving the
  average-value function <psi|P|psi>.

All three modes go through the same formulas (see ``FeedbackLaw``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DimensionError, as_hermitian, as_state, is_positive_definite
from .system import ControlledSystem

MODES = ("full", "drop-target-term", "identity-p-half")


@dataclass(frozen=True)
class OddFunction:
    """Odd, sign-preserving shaping function applied to the feedback term."""

    kind: str = "identity"
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "tanh", "saturated"):
            raise ValueError(f"unknown odd function kind {self.kind!r}")
        if self.kind != "identity" and not self.param > 0:
            raise ValueError("odd function parameter must be positive")

    def __call__(self, x):
        if self.kind == "identity":
            return x
        if self.kind == "tanh":
            return self.param * np.tanh(x / self.param)
        return np.clip(x, -self.param, self.param)

    def to_dict(self) -> dict:
        if self.kind == "identity":
            return {"kind": "identity"}
        key = "scale" if self.kind == "tanh" else "limit"
        return {"kind": self.kind, key: self.param}


@dataclass(frozen=True)
class ControllerConfig:
    p: np.ndarray
    target: np.ndarray
    gains: tuple
    odd: tuple = ()
    mode: str = "full"

    def __post_init__(self):
        p = as_hermitian(self.p)
        if not is_positive_definite(p):
            raise ValueError("P must be positive definite")
        target = as_state(self.target)
        if target.shape[0] != p.shape[0]:
            raise DimensionError("target and P dimensions differ")
        gains = tuple(float(k) for k in np.atleast_1d(self.gains))
        if any(not (k >= 0 and math.isfinite(k)) for k in gains):
            raise ValueError("gains must be positive (zero switches a control off)")
        odd = tuple(self.odd) if self.odd else tuple(OddFunction() for _ in gains)
        if len(odd) != len(gains):
            raise ValueError("need one odd function per gain")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "odd", odd)

    @property
    def effective_p(self) -> np.ndarray:
        if self.mode == "identity-p-half":
            return np.eye(self.p.shape[0], dtype=complex) / 2
        return np.asarray(self.p)

    @property
    def target_weight(self) -> float:
        return 0.0 if self.mode == "drop-target-term" else 1.0

    def with_mode(self, mode: str) -> "ControllerConfig":
        return ControllerConfig(self.p, self.target, self.gains, self.odd, mode)

    def with_gains(self, gains) -> "ControllerConfig":
        return ControllerConfig(self.p, self.target, gains, self.odd, self.mode)


class VdotParts(NamedTuple):
    total: float
    drift: float
    control: float


class FeedbackLaw:
    """Operators of the feedback law precomputed for one (config, system) pair.

    ``comm[k]`` holds the Hermitian matrix i[H_k, P] so the first feedback
    term is a real quadratic form; ``target_vec[k]`` holds H_k P psi_f.
    """

    def __init__(self, cfg: ControllerConfig, sys: ControlledSystem):
        if cfg.p.shape != sys.h0.shape:
            raise DimensionError("controller and system dimensions differ")
        if len(cfg.gains) != sys.n_controls:
            raise DimensionError(
                f"{len(cfg.gains)} gains given for {sys.n_controls} control Hamiltonians"
            )
        self.cfg = cfg
        self.sys = sys
        p = cfg.effective_p
        self.p = p
        self.w = cfg.target_weight
        self.psif = np.asarray(cfg.target)
        self.p_psif = p @ self.psif
        self.pf = float(np.vdot(self.psif, self.p_psif).real)
        hs = np.array(sys.controls)
        self.comm = 1j * (hs @ p - p @ hs)
        self.target_vec = hs @ self.p_psif
        self.drift_comm = 1j * (sys.h0 @ p - p @ sys.h0)
        self.drift_vec = sys.h0 @ self.p_psif
        self.gains = np.array(cfg.gains)
        self._identity = all(f.kind == "identity" for f in cfg.odd)

    def terms(self, psi, check: bool = True) -> np.ndarray:
        psi = np.asarray(psi)
        cpsi = psi.conj()
        first = (self.comm @ psi) @ cpsi
        if check:
            scale = max(1.0, float(np.abs(self.comm).max()))
            if np.abs(first.imag).max() > 1e-10 * scale:
                raise ArithmeticError(f"feedback term has imaginary residue {first.imag}")
        x = first.real
        if self.w:
            x = x + (2.0 * self.w) * (self.target_vec @ cpsi).imag
        return x

    def control(self, psi) -> np.ndarray:
        x = self.terms(psi)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("non-finite feedback term")
        return self.shape(x)

    def shape(self, x) -> np.ndarray:
        """u = -K f(x) for feedback terms ``x``."""
        if self._identity:
            return -self.gains * x
        return -self.gains * np.array([f(xk) for f, xk in zip(self.cfg.odd, x)])

    def value(self, psi) -> float:
        return float(self.values(np.asarray(psi)[None, :])[0])

    def values(self, states) -> np.ndarray:
        """Lyapunov value for each row of ``states``."""
        states = np.asarray(states)
        v = np.einsum("ti,ij,tj->t", states.conj(), self.p, states).real
        if self.w:
            v = v - 2.0 * (states.conj() @ self.p_psif).real + self.pf
        return v

    def vdot(self, psi, u) -> VdotParts:
        psi = np.asarray(psi)
        u = np.asarray(u, dtype=float)
        hbar = self.sys.hbar
        drift = np.vdot(psi, self.drift_comm @ psi).real
        if self.w:
            drift += 2.0 * self.w * np.vdot(psi, self.drift_vec).imag
        control = float(u @ self.terms(psi))
        return VdotParts((drift + control) / hbar, drift / hbar, control / hbar)


def _check_psi(cfg: ControllerConfig, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != cfg.target.shape:
        raise DimensionError(f"state has shape {psi.shape}, expected {cfg.target.shape}")
    return psi


def lyapunov_value(cfg: ControllerConfig, psi) -> float:
    psi = _check_psi(cfg, psi)
    d = psi - cfg.target * cfg.target_weight
    return float(np.vdot(d, cfg.effective_p @ d).real)


def equivalence_class_min_value(cfg: ControllerConfig, psi) -> float:
    """Smallest V over all global phases of the target.

    min over beta of <psi - e^{i beta} psi_f|P|psi - e^{i beta} psi_f>
    = <psi|P|psi> + <psi_f|P|psi_f> - 2 |<psi|P|psi_f>|.
    """
    psi = _check_psi(cfg, psi)
    p = cfg.effective_p
    f = cfg.target
    val = np.vdot(psi, p @ psi).real + np.vdot(f, p @ f).real - 2.0 * abs(np.vdot(psi, p @ f))
    return float(max(val, 0.0))


def control_terms(cfg: ControllerConfig, sys: ControlledSystem, psi) -> np.ndarray:
    return FeedbackLaw(cfg, sys).terms(_check_psi(cfg, psi))


def control_law(cfg: ControllerConfig, sys: ControlledSystem, psi) -> np.ndarray:
    return FeedbackLaw(cfg, sys).control(_check_psi(cfg, psi))


def lyapunov_derivative(cfg: ControllerConfig, sys: ControlledSystem, psi, u) -> VdotParts:
    """Analytic dV/dt at ``psi`` under constant controls ``u``.

    The control part equals (1/hbar) * sum_k u_k x_k with x_k from
    ``control_terms``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != sys.n_controls:
        raise DimensionError("control vector length mismatch")
    return FeedbackLaw(cfg, sys).vdot(_check_psi(cfg, psi), u)
