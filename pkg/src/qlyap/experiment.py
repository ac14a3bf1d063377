"""Experiment orchestration: checks, P construction, simulation, artifacts."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .controller import MODES, equivalence_class_min_value
from .core import ConvergenceError, hermitian_eigendecompose
from .design import check_offdiagonal_condition
from .invariant import (
    case1_residuals,
    case1_structural_condition,
    case2_residuals,
    classify_case,
    classify_limit,
)
from .simulate import SimulationAborted, Trajectory, simulate
from .system import check_assumptions

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


@dataclass
class ExperimentResult:
    status: int
    report: str
    trajectory: Trajectory | None = None
    paths: dict = field(default_factory=dict)
    p: np.ndarray | None = None


def check_report(exp: io.ExperimentConfig, seed: int | None = None):
    """Assumption and P-design checks. Returns ``(ok, lines, p)``."""
    lines = []
    assumptions = check_assumptions(exp.system, exp.target)
    lines += assumptions.lines()
    p = exp.build_p(seed)
    w = hermitian_eigendecompose(p).eigenvalues
    lines.append(f"P variant: {exp.p_spec.variant}; eigenvalues {np.array2string(w, precision=6)}")
    case = classify_case(p, exp.system)
    lines.append(f"case: {case}")
    ok = assumptions.all_ok and w[0] > 0
    offdiag = check_offdiagonal_condition(p, exp.system)
    m, j = offdiag.argmin
    lines.append(
        "off-diagonal condition (all <lambda_m|P|lambda_j> nonzero, m != j): "
        f"{'satisfied' if offdiag else 'NOT satisfied'}; min magnitude {offdiag.min_magnitude:.12g}"
        f" at ({m + 1},{j + 1}), tol {offdiag.tol:.3g}"
    )
    return ok, lines, p


def _structural_lines(cfg, exp, psi, label):
    s = case1_structural_condition(cfg, exp.system, psi)
    if s:
        return [f"commuting-case structural condition at {label}: satisfied (max product {s.max_product:.3g})"]
    shown = ", ".join(f"H{k + 1}:({m + 1},{j + 1})" for k, m, j in s.violations[:10])
    more = "" if len(s.violations) <= 10 else f" and {len(s.violations) - 10} more"
    return [
        f"commuting-case structural condition at {label}: VIOLATED "
        f"(max |c_m c_j <lambda_m|H_k|lambda_j>| = {s.max_product:.6g}; pairs {shown}{more})"
    ]


def _resolve(out_dir, exp):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return {k: out / v for k, v in exp.outputs.items()}


def run_experiment(
    exp: io.ExperimentConfig,
    out_dir=None,
    seed: int | None = None,
    override_assumptions: bool = False,
) -> ExperimentResult:
    """Check, simulate and (if ``out_dir`` is given) write all artifacts."""
    try:
        ok, lines, p = check_report(exp, seed)
    except (ValueError, ConvergenceError) as exc:
        return ExperimentResult(EXIT_VALIDATION, f"design-p: {exc}\n")
    lines = [f"experiment: {exp.name or '(unnamed)'}", f"mode: {exp.mode}", ""] + lines
    if not ok:
        if not override_assumptions:
            lines.append("aborting: assumption checks failed (use --override-assumptions to run anyway)")
            return ExperimentResult(EXIT_VALIDATION, "\n".join(lines) + "\n", p=p)
        lines.append("assumption checks failed; continuing because of override")
    try:
        cfg = exp.controller(p)
    except ValueError as exc:
        return ExperimentResult(EXIT_VALIDATION, "\n".join(lines + [f"controller: {exc}"]) + "\n", p=p)

    case = classify_case(cfg.effective_p, exp.system)
    if case.commuting:
        lines += _structural_lines(cfg, exp, exp.initial, "initial state")

    status = EXIT_OK
    try:
        traj = simulate(exp.system, cfg, exp.simulation, exp.initial, check=False)
    except SimulationAborted as exc:
        traj = exc.trajectory
        status = EXIT_NUMERIC
        lines.append(f"simulator: numeric abort: {exc}")
    except ConvergenceError as exc:
        return ExperimentResult(EXIT_NUMERIC, "\n".join(lines + [f"simulator: {exc}"]) + "\n", p=p)

    sim = exp.simulation
    lines += [
        "",
        f"simulation: dt = {sim.dt:g}, t_final = {sim.t_final:g}, steps = {sim.n_steps}, "
        f"records = {len(traj)}",
    ]
    if len(traj):
        final = traj.states[-1]
        f_final = traj.fidelity_to_target[-1]
        norms = np.linalg.norm(traj.states, axis=1)
        lim = classify_limit(traj, exp.system, exp.target)
        lines += [
            f"final fidelity |<psi(T)|psi_f>| = {f_final:.6f} (squared {f_final ** 2:.6f})",
            f"V(0) = {traj.lyapunov[0]:.6g}, V(T) = {traj.lyapunov[-1]:.6g}, min V = {traj.lyapunov.min():.6g}",
            f"phase-minimized V(T) = {equivalence_class_min_value(cfg, final):.6g}",
            f"max control part of dV/dt over all steps = {traj.max_vdot_control:.3g}",
            f"max norm drift = {np.abs(norms - 1).max():.3g}",
            f"max |u| = {np.abs(traj.controls).max():.6g}",
            "final drift-eigenbasis populations: " + np.array2string(lim.overlaps, precision=6),
            f"dominant drift eigenstate: level {lim.dominant_index + 1}",
        ]
        r2 = case2_residuals(final, cfg, exp.system)
        lines.append(
            "invariant-set residuals at final state: "
            + ", ".join(f"{k} = {np.array2string(np.atleast_1d(v), precision=3)}" for k, v in r2.residuals.items())
        )
        if case.commuting:
            r1 = case1_residuals(final, cfg, exp.system)
            lines.append(
                "commuting-case residuals at final state: "
                + ", ".join(
                    f"{k} = {'n/a' if v is None else np.array2string(np.atleast_1d(v), precision=3)}"
                    for k, v in r1.residuals.items()
                )
            )
            lines += _structural_lines(cfg, exp, final, "final state")
    report = "\n".join(lines) + "\n"

    paths = {}
    if out_dir is not None:
        paths = _resolve(out_dir, exp)
        if len(traj):
            io.write_trajectory_csv(traj, paths["csv"])
            io.write_trajectory_plots(traj, paths)
        paths["report"].write_text(report, encoding="utf-8")
        paths = {k: paths[k] for k in ("csv", "populations_svg", "lyapunov_svg", "controls_svg", "report")}
    return ExperimentResult(status, report, traj, paths, p)


@dataclass
class ModeRow:
    mode: str
    final_fidelity: float
    min_v: float
    max_abs_u: float
    trajectory: Trajectory


def compare_modes(exp: io.ExperimentConfig, out_dir=None, seed: int | None = None, modes=MODES) -> list[ModeRow]:
    """Run the configured experiment under each controller mode on one horizon."""
    p = exp.build_p(seed)
    base = exp.controller(p)
    rows = []
    for mode in modes:
        cfg = base.with_mode(mode)
        traj = simulate(exp.system, cfg, exp.simulation, exp.initial, check=False)
        rows.append(
            ModeRow(
                mode,
                float(traj.fidelity_to_target[-1]),
                float(traj.lyapunov.min()),
                float(np.abs(traj.controls).max()),
                traj,
            )
        )
    if out_dir is not None:
        paths = _resolve(out_dir, exp)
        io.write_rows_csv(
            ["mode", "final_fidelity", "min_V", "max_abs_u"],
            [[r.mode, r.final_fidelity, r.min_v, r.max_abs_u] for r in rows],
            paths["comparison_csv"],
        )
        paths["comparison_svg"].write_text(
            io.line_plot_svg(
                [(r.mode, r.trajectory.times, r.trajectory.fidelity_to_target) for r in rows],
                "Target fidelity by controller mode", "t", "|<psi|psi_f>|",
            ),
            encoding="utf-8",
        )
    return rows
