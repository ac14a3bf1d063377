"""Bilinear controlled Schrödinger systems and numerical checks of their
standing assumptions (controllability, spectral gaps, target placement)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DimensionError,
    as_hermitian,
    as_state,
    hermitian_eigendecompose,
)


@dataclass(frozen=True)
class ControlledSystem:
    """Drift ``h0`` plus control Hamiltonians ``controls`` (H = H0 + sum u_k H_k)."""

    h0: np.ndarray
    controls: tuple
    hbar: float = 1.0

    def __post_init__(self):
        h0 = as_hermitian(self.h0)
        controls = tuple(as_hermitian(h) for h in self.controls)
        if not controls:
            raise ValueError("at least one control Hamiltonian is required")
        for k, h in enumerate(controls):
            if h.shape != h0.shape:
                raise DimensionError(
                    f"control {k} has shape {h.shape}, drift has {h0.shape}"
                )
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def spectrum(self):
        return hermitian_eigendecompose(self.h0)


def hamiltonian_at(sys: ControlledSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != sys.n_controls:
        raise DimensionError(f"expected {sys.n_controls} control values, got {u.shape[0]}")
    if not np.all(np.isfinite(u)):
        raise ValueError("control values must be finite")
    h = np.array(sys.h0)
    for uk, hk in zip(u, sys.controls):
        h = h + uk * hk
    return h


@dataclass
class Verdict:
    ok: bool
    margin: float
    detail: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def check_lambda_nondegenerate(sys_or_h0, tol: float = 1e-9) -> Verdict:
    """Distinct eigenvalues and pairwise-distinct energy gaps.

    Every unordered pair (i, j) gives a gap; all gaps must differ from each
    other by more than ``tol``. ``margin`` is the smallest separation found
    (among eigenvalues and among gaps).
    """
    h0 = sys_or_h0.h0 if isinstance(sys_or_h0, ControlledSystem) else as_hermitian(sys_or_h0)
    w = hermitian_eigendecompose(h0).eigenvalues
    n = len(w)
    repeated = [(i, j) for i in range(n) for j in range(i + 1, n) if abs(w[j] - w[i]) <= tol]
    eig_margin = float(np.min(np.diff(w)))
    pairs = list(itertools.combinations(range(n), 2))
    gaps = {(i, j): w[j] - w[i] for i, j in pairs}
    clashes = []
    gap_margin = np.inf
    for a, b in itertools.combinations(pairs, 2):
        d = abs(gaps[a] - gaps[b])
        gap_margin = min(gap_margin, d)
        if d <= tol:
            clashes.append((a, b))
    margin = float(min(eig_margin, gap_margin))
    return Verdict(
        ok=not repeated and not clashes,
        margin=margin,
        detail={"eigenvalues": w, "repeated_eigenvalues": repeated, "repeated_gaps": clashes},
    )


def _antihermitian_basis_vec(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x.real.ravel(), x.imag.ravel()])


def check_controllability(sys: ControlledSystem, tol: float = 1e-8, max_depth: int | None = None) -> Verdict:
    """Lie-algebra rank test for equivalent-state controllability.

    The generators iH0, iH1, ... are projected onto su(N) (global phase is
    irrelevant for equivalent states) and closed under brackets with the
    generators until the span stops growing. Rank is counted from singular
    values above ``tol`` times the largest one. Passes iff rank = N^2 - 1.
    """
    n = sys.dim
    target = n * n - 1
    eye = np.eye(n)

    def traceless(h):
        return 1j * (h - np.trace(h) / n * eye)

    gens = [traceless(h) for h in (sys.h0, *sys.controls)]

    def rank_of(mats):
        if not mats:
            return 0, []
        m = np.array([_antihermitian_basis_vec(x) for x in mats])
        s = np.linalg.svd(m, compute_uv=False)
        if s[0] == 0:
            return 0, s
        return int(np.sum(s > tol * s[0])), s

    basis: list[np.ndarray] = []
    for g in gens:
        if rank_of(basis + [g])[0] > len(basis):
            basis.append(g)
    frontier = list(basis)
    depth = 0
    max_depth = max_depth if max_depth is not None else n * n
    while frontier and len(basis) < target:
        depth += 1
        if depth > max_depth:
            return Verdict(False, float(len(basis)), {"rank": len(basis), "partial": True, "depth": depth})
        new = []
        for x in frontier:
            for g in gens:
                c = x @ g - g @ x
                if np.abs(c).max() <= 1e-14:
                    continue
                c = c / np.linalg.norm(c)
                if rank_of(basis + [c])[0] > len(basis):
                    basis.append(c)
                    new.append(c)
        frontier = new
    rank = len(basis)
    return Verdict(rank >= target, float(rank - target), {"rank": rank, "required": target, "depth": depth})


def _eigen_residual(h: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    mean = complex(np.vdot(v, h @ v)).real
    return float(np.linalg.norm(h @ v - mean * v)), mean


def check_target_assumptions(sys: ControlledSystem, psif, tol: float = 1e-9) -> dict:
    """Target must be an H0 eigenstate and not an eigenstate of any H_k."""
    psif = as_state(psif)
    if psif.shape[0] != sys.dim:
        raise DimensionError(f"target has length {psif.shape[0]}, system has dimension {sys.dim}")
    res0, lam_f = _eigen_residual(sys.h0, psif)
    per_k = []
    for h in sys.controls:
        r, _ = _eigen_residual(h, psif)
        per_k.append(Verdict(r > tol, r))
    return {
        "target_is_h0_eigenstate": Verdict(res0 <= tol, res0, {"lambda_f": lam_f}),
        "target_not_control_eigenstate": per_k,
        "lambda_f": lam_f,
    }


def check_no_common_eigenvector(controls, tol: float = 1e-9) -> Verdict:
    """No eigenvector of H_1 is simultaneously an eigenvector of every other H_k.

    Degenerate eigenspaces of H_1 are flagged in ``detail["degenerate"]`` and
    not searched.
    """
    controls = [as_hermitian(h) for h in controls]
    if len(controls) == 1:
        return Verdict(True, np.inf, {"vacuous": True, "degenerate": []})
    w, v = hermitian_eigendecompose(controls[0])
    degenerate = [(i, i + 1) for i in range(len(w) - 1) if abs(w[i + 1] - w[i]) <= tol]
    worst = np.inf
    shared = []
    for i in range(len(w)):
        vec = v[:, i]
        best = max(_eigen_residual(h, vec)[0] for h in controls[1:])
        worst = min(worst, best)
        if best <= tol:
            shared.append(i)
    return Verdict(not shared, float(worst), {"shared": shared, "degenerate": degenerate})


@dataclass
class AssumptionReport:
    esc_lie_rank: Verdict
    lambda_nondegenerate: Verdict
    target_is_h0_eigenstate: Verdict
    target_not_control_eigenstate: list
    controls_no_common_eigenvector: Verdict
    lambda_f: float

    @property
    def all_ok(self) -> bool:
        return bool(
            self.esc_lie_rank
            and self.lambda_nondegenerate
            and self.target_is_h0_eigenstate
            and all(self.target_not_control_eigenstate)
            and self.controls_no_common_eigenvector
        )

    def lines(self) -> list[str]:
        def fmt(v):
            return "pass" if v else "FAIL"

        out = [
            f"assumption ESC (Lie rank {self.esc_lie_rank.detail.get('rank')}"
            f" / {self.esc_lie_rank.detail.get('required')}): {fmt(self.esc_lie_rank)}",
            f"assumption lambda-nondegenerate (margin {self.lambda_nondegenerate.margin:.6g}):"
            f" {fmt(self.lambda_nondegenerate)}",
            f"assumption target is H0 eigenstate (residual {self.target_is_h0_eigenstate.margin:.3g},"
            f" lambda_f = {self.lambda_f:.6g}): {fmt(self.target_is_h0_eigenstate)}",
        ]
        for k, v in enumerate(self.target_not_control_eigenstate, start=1):
            out.append(f"assumption target not eigenstate of H{k} (residual {v.margin:.6g}): {fmt(v)}")
        c = self.controls_no_common_eigenvector
        note = " (vacuous, r = 1)" if c.detail.get("vacuous") else ""
        if c.detail.get("degenerate"):
            note += f" [degenerate H1 eigenspaces flagged: {c.detail['degenerate']}]"
        out.append(f"assumption controls share no eigenvector{note}: {fmt(c)}")
        return out


def check_assumptions(sys: ControlledSystem, psif, tol: float = 1e-9) -> AssumptionReport:
    target = check_target_assumptions(sys, psif, tol)
    return AssumptionReport(
        esc_lie_rank=check_controllability(sys),
        lambda_nondegenerate=check_lambda_nondegenerate(sys, tol),
        target_is_h0_eigenstate=target["target_is_h0_eigenstate"],
        target_not_control_eigenstate=target["target_not_control_eigenstate"],
        controls_no_common_eigenvector=check_no_common_eigenvector(sys.controls, tol),
        lambda_f=target["lambda_f"],
    )
