"""Experiment configuration files and artifact writers (CSV, SVG, JSON).

Config files are JSON. Complex numbers are written either as plain numbers
(real) or as two-element ``[re, im]`` arrays. See ``README.md`` for the full
schema; ``data/five_level.json`` is a complete example.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .controller import MODES, ControllerConfig, OddFunction
from .design import build_commuting_p, build_spectral_p, generate_random_p
from .simulate import SimulationConfig, Trajectory
from .system import ControlledSystem

log = logging.getLogger(__name__)

DEFAULT_OUTPUTS = {
    "csv": "trajectory.csv",
    "populations_svg": "populations.svg",
    "lyapunov_svg": "lyapunov.svg",
    "controls_svg": "controls.svg",
    "report": "report.txt",
    "comparison_csv": "comparison.csv",
    "comparison_svg": "comparison.svg",
}
HERMITIAN_TOL = 1e-12
AUTONORMALIZE_TOL = 1e-6


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


# -- P specification ---------------------------------------------------------

P_VARIANTS = ("commuting", "spectral", "explicit", "random")


@dataclass
class PSpec:
    variant: str
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None  # rows are the input vectors
    matrix: np.ndarray | None = None
    seed: int | None = None
    min_offdiag: float = 0.1
    min_eigenvalue: float = 0.1

    def build(self, sys: ControlledSystem, seed: int | None = None) -> np.ndarray:
        if self.variant == "explicit":
            return np.asarray(self.matrix)
        if self.variant == "commuting":
            return build_commuting_p(sys, self.eigenvalues)
        if self.variant == "spectral":
            p, _ = build_spectral_p(self.eigenvectors, self.eigenvalues)
            return p
        if self.variant == "random":
            s = self.seed if seed is None else seed
            return generate_random_p(sys, s, self.min_offdiag, self.min_eigenvalue)
        raise ValueError(f"unknown P variant {self.variant!r}")


# -- experiment config -------------------------------------------------------


@dataclass
class ExperimentConfig:
    system: ControlledSystem
    target: np.ndarray
    initial: np.ndarray
    p_spec: PSpec
    gains: tuple
    odd: tuple
    mode: str = "full"
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    name: str = ""
    description: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.system.dim

    def build_p(self, seed: int | None = None) -> np.ndarray:
        return self.p_spec.build(self.system, seed)

    def controller(self, p=None, seed: int | None = None) -> ControllerConfig:
        if p is None:
            p = self.build_p(seed)
        return ControllerConfig(p, self.target, self.gains, self.odd, self.mode)


def _entry(x, path, errors):
    if isinstance(x, bool):
        errors.append(f"{path}: expected a number, got a boolean")
        return 0j
    if isinstance(x, (int, float)):
        return complex(x)
    if (
        isinstance(x, list)
        and len(x) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    ):
        return complex(x[0], x[1])
    errors.append(f"{path}: expected a number or [re, im], got {x!r}")
    return 0j


def _vector(x, path, errors):
    if not isinstance(x, list) or not x:
        errors.append(f"{path}: expected a non-empty list")
        return None
    return np.array([_entry(v, f"{path}[{i}]", errors) for i, v in enumerate(x)], dtype=complex)


def _matrix(x, path, errors, hermitian=True):
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        errors.append(f"{path}: expected a list of rows")
        return None
    n = len(x)
    if any(len(r) != n for r in x):
        errors.append(f"{path}: matrix must be square ({n} rows, row lengths {[len(r) for r in x]})")
        return None
    m = np.array(
        [[_entry(v, f"{path}[{i}][{j}]", errors) for j, v in enumerate(r)] for i, r in enumerate(x)],
        dtype=complex,
    )
    if hermitian:
        dev = np.abs(m - m.conj().T)
        bad = np.argwhere(dev > HERMITIAN_TOL)
        for i, j in bad:
            if i < j:
                errors.append(
                    f"{path}: not Hermitian, entry [{i}][{j}] = {m[i, j]} but "
                    f"conj([{j}][{i}]) = {np.conj(m[j, i])}"
                )
        if not len(bad):
            m = (m + m.conj().T) / 2
    return m


def _unit(v, path, errors):
    if v is None:
        return None
    norm = float(np.linalg.norm(v))
    if abs(norm - 1) <= 1e-12:
        return v
    if abs(norm - 1) <= AUTONORMALIZE_TOL:
        log.warning("%s: norm %.12g normalized to 1", path, norm)
        return v / norm
    errors.append(f"{path}: vector must have unit norm (got {norm:.6g})")
    return None


def _positive_number(x, path, errors, integer=False, allow_zero=False):
    ok = isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
    if ok and integer:
        ok = float(x).is_integer()
    if ok:
        ok = x >= 0 if allow_zero else x > 0
    if not ok:
        kind = "integer" if integer else "number"
        errors.append(f"{path}: expected a positive {kind}, got {x!r}")
        return None
    return int(x) if integer else float(x)


def _parse_odd(spec, path, errors):
    if not isinstance(spec, dict) or "kind" not in spec:
        errors.append(f"{path}: expected an object with a 'kind' field")
        return OddFunction()
    kind = spec["kind"]
    if kind == "identity":
        return OddFunction()
    if kind in ("tanh", "tanh-scaled"):
        v = _positive_number(spec.get("scale"), f"{path}.scale", errors)
        return OddFunction("tanh", v or 1.0)
    if kind in ("saturated", "saturated-linear"):
        v = _positive_number(spec.get("limit"), f"{path}.limit", errors)
        return OddFunction("saturated", v or 1.0)
    errors.append(f"{path}.kind: unknown odd function {kind!r}")
    return OddFunction()


def _parse_p_spec(d, n, errors):
    if not isinstance(d, dict):
        errors.append("p_spec: expected an object")
        return None
    variant = d.get("variant")
    if variant not in P_VARIANTS:
        errors.append(f"p_spec.variant: must be one of {P_VARIANTS}, got {variant!r}")
        return None
    spec = PSpec(variant)
    if variant in ("commuting", "spectral"):
        ev = d.get("eigenvalues")
        if not isinstance(ev, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in ev):
            errors.append("p_spec.eigenvalues: expected a list of numbers")
        else:
            spec.eigenvalues = np.array(ev, dtype=float)
            if n is not None and len(ev) != n:
                errors.append(f"p_spec.eigenvalues: need {n} values, got {len(ev)}")
            if np.any(spec.eigenvalues <= 0):
                errors.append("p_spec.eigenvalues: must be strictly positive")
    if variant == "spectral":
        vecs = d.get("eigenvectors")
        if not isinstance(vecs, list):
            errors.append("p_spec.eigenvectors: expected a list of vectors")
        else:
            rows = [_vector(v, f"p_spec.eigenvectors[{i}]", errors) for i, v in enumerate(vecs)]
            if all(r is not None for r in rows):
                if n is not None and (len(rows) != n or any(len(r) != n for r in rows)):
                    errors.append(f"p_spec.eigenvectors: need {n} vectors of length {n}")
                else:
                    spec.eigenvectors = np.array(rows)
    if variant == "explicit":
        m = _matrix(d.get("matrix"), "p_spec.matrix", errors)
        if m is not None:
            if n is not None and m.shape[0] != n:
                errors.append(f"p_spec.matrix: dimension {m.shape[0]} does not match system dimension {n}")
            elif np.allclose(m, m.conj().T, atol=HERMITIAN_TOL) and np.linalg.eigvalsh(m)[0] <= 0:
                errors.append("p_spec.matrix: must be positive definite")
            spec.matrix = m
    if variant == "random":
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            errors.append(f"p_spec.seed: expected a non-negative integer, got {seed!r}")
        else:
            spec.seed = seed
        spec.min_offdiag = _positive_number(d.get("min_offdiag", 0.1), "p_spec.min_offdiag", errors, allow_zero=True) or 0.0
        spec.min_eigenvalue = _positive_number(d.get("min_eigenvalue", 0.1), "p_spec.min_eigenvalue", errors) or 0.1
    return spec


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Raises ``ConfigError`` listing every validation problem, not just the
    first one.
    """
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from exc
    if not isinstance(d, dict):
        raise ConfigError(["top level: expected a JSON object"])
    errors: list[str] = []

    sysd = d.get("system")
    h0 = controls = None
    hbar = 1.0
    if not isinstance(sysd, dict):
        errors.append("system: expected an object with h0 and controls")
    else:
        hbar = _positive_number(sysd.get("hbar", 1.0), "system.hbar", errors) or 1.0
        h0 = _matrix(sysd.get("h0"), "system.h0", errors)
        cl = sysd.get("controls")
        if not isinstance(cl, list) or not cl:
            errors.append("system.controls: expected a non-empty list of matrices")
        else:
            controls = [_matrix(m, f"system.controls[{k}]", errors) for k, m in enumerate(cl)]
    n = h0.shape[0] if h0 is not None else None
    if n is not None and n < 2:
        errors.append("system.h0: dimension must be at least 2")
    if controls and n is not None:
        for k, m in enumerate(controls):
            if m is not None and m.shape[0] != n:
                errors.append(f"system.controls[{k}]: dimension {m.shape[0]} does not match h0 dimension {n}")

    vecs = {}
    for key in ("target", "initial"):
        v = _vector(d.get(key), key, errors)
        if v is not None and n is not None and len(v) != n:
            errors.append(f"{key}: length {len(v)} does not match system dimension {n}")
            v = None
        vecs[key] = _unit(v, key, errors)

    p_spec = _parse_p_spec(d.get("p_spec"), n, errors)

    r = len(controls) if controls else None
    gains = d.get("gains")
    if not isinstance(gains, list) or not all(isinstance(g, (int, float)) and not isinstance(g, bool) for g in gains):
        errors.append("gains: expected a list of numbers")
        gains = []
    else:
        if any(not (math.isfinite(g) and g >= 0) for g in gains):
            errors.append("gains: gains must be positive")
        if r is not None and len(gains) != r:
            errors.append(f"gains: need {r} gains (one per control Hamiltonian), got {len(gains)}")
    odd_raw = d.get("odd", [{"kind": "identity"}] * max(len(gains), 1))
    if not isinstance(odd_raw, list):
        errors.append("odd: expected a list")
        odd_raw = []
    odd = tuple(_parse_odd(o, f"odd[{i}]", errors) for i, o in enumerate(odd_raw))
    if gains and len(odd) != len(gains):
        errors.append(f"odd: need {len(gains)} entries, got {len(odd)}")

    mode = d.get("mode", "full")
    if mode not in MODES:
        errors.append(f"mode: must be one of {MODES}, got {mode!r}")

    simd = d.get("simulation", {})
    sim = None
    if not isinstance(simd, dict):
        errors.append("simulation: expected an object")
    else:
        dt = _positive_number(simd.get("dt", SimulationConfig.dt), "simulation.dt", errors)
        tf = _positive_number(simd.get("t_final", SimulationConfig.t_final), "simulation.t_final", errors)
        stride = _positive_number(simd.get("record_stride", 1), "simulation.record_stride", errors, integer=True)
        renorm = simd.get("renormalize", True)
        if not isinstance(renorm, bool):
            errors.append("simulation.renormalize: expected true or false")
        if dt and tf and stride and isinstance(renorm, bool):
            try:
                sim = SimulationConfig(dt, tf, stride, renorm)
            except ValueError as exc:
                errors.append(f"simulation: {exc}")

    outputs = dict(DEFAULT_OUTPUTS)
    outd = d.get("outputs", {})
    if not isinstance(outd, dict) or not all(isinstance(v, str) for v in outd.values()):
        errors.append("outputs: expected an object of file names")
    else:
        unknown = set(outd) - set(DEFAULT_OUTPUTS)
        if unknown:
            errors.append(f"outputs: unknown keys {sorted(unknown)}")
        outputs.update(outd)

    system = None
    if not errors:
        try:
            system = ControlledSystem(h0, controls, hbar)
        except ValueError as exc:
            errors.append(f"system: {exc}")
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        system=system,
        target=vecs["target"],
        initial=vecs["initial"],
        p_spec=p_spec,
        gains=tuple(float(g) for g in gains),
        odd=odd,
        mode=mode,
        simulation=sim,
        outputs=outputs,
        name=str(d.get("name", "")),
        description=str(d.get("description", "")),
        provenance=d.get("provenance", {}),
    )


def _enc_entry(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _enc_vector(v):
    return [_enc_entry(z) for z in np.asarray(v)]


def _enc_matrix(m):
    return [_enc_vector(row) for row in np.asarray(m)]


def p_spec_to_dict(spec: PSpec) -> dict:
    d = {"variant": spec.variant}
    if spec.variant in ("commuting", "spectral"):
        d["eigenvalues"] = [float(x) for x in spec.eigenvalues]
    if spec.variant == "spectral":
        d["eigenvectors"] = [_enc_vector(v) for v in spec.eigenvectors]
    if spec.variant == "explicit":
        d["matrix"] = _enc_matrix(spec.matrix)
    if spec.variant == "random":
        d.update(seed=spec.seed, min_offdiag=spec.min_offdiag, min_eigenvalue=spec.min_eigenvalue)
    return d


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = {}
    if cfg.name:
        d["name"] = cfg.name
    if cfg.description:
        d["description"] = cfg.description
    d["system"] = {
        "hbar": cfg.system.hbar,
        "h0": _enc_matrix(cfg.system.h0),
        "controls": [_enc_matrix(h) for h in cfg.system.controls],
    }
    d["target"] = _enc_vector(cfg.target)
    d["initial"] = _enc_vector(cfg.initial)
    d["p_spec"] = p_spec_to_dict(cfg.p_spec)
    d["gains"] = list(cfg.gains)
    d["odd"] = [f.to_dict() for f in cfg.odd]
    d["mode"] = cfg.mode
    s = cfg.simulation
    d["simulation"] = {"dt": s.dt, "t_final": s.t_final, "record_stride": s.record_stride, "renormalize": s.renormalize}
    d["outputs"] = dict(cfg.outputs)
    if cfg.provenance:
        d["provenance"] = cfg.provenance
    return d


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def bundled_config_path(name: str = "five_level.json") -> Path:
    return Path(str(resources.files("qlyap") / "data" / name))


def matrix_to_json(m) -> list:
    return _enc_matrix(m)


# -- CSV ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    # repr gives the shortest string that round-trips
    return repr(float(x))


def trajectory_columns(n: int, r: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"re_c{i}", f"im_c{i}"]
    cols += [f"pop_{i}" for i in range(1, n + 1)]
    cols += [f"u_{k}" for k in range(1, r + 1)]
    cols += ["V", "fidelity"]
    return cols


def write_trajectory_csv(traj: Trajectory, path) -> None:
    n = traj.states.shape[1]
    r = traj.controls.shape[1]
    pops = traj.populations
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_columns(n, r))
        for i in range(len(traj)):
            row = [_fmt(traj.times[i])]
            for z in traj.states[i]:
                row += [_fmt(z.real), _fmt(z.imag)]
            row += [_fmt(p) for p in pops[i]]
            row += [_fmt(u) for u in traj.controls[i]]
            row += [_fmt(traj.lyapunov[i]), _fmt(traj.fidelity_to_target[i])]
            w.writerow(row)


def write_rows_csv(header, rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 800, 500
MARGIN = dict(left=70, right=150, top=40, bottom=55)
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
MAX_POINTS = 2000


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_plot_svg(series, title="", xlabel="", ylabel="") -> str:
    """Render ``series`` (list of ``(label, x, y)``) as a standalone SVG.

    One ``<polyline>`` per series; axes are linear and autoscaled with 5%
    margins. Long series are thinned to at most 2000 points.
    """
    xs = np.concatenate([np.asarray(x, float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, float) for _, _, y in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad_x, pad_y = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0 + pad_x, x1 - pad_x):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MARGIN["top"] + ph}" x2="{sx(t):.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0 + pad_y, y1 - pad_y):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{sy(t):.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, x, y) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if len(x) > MAX_POINTS:
            idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
            x, y = x[idx], y[idx]
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 10 + 18 * i
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_trajectory_plots(traj: Trajectory, paths: dict) -> None:
    t = traj.times
    pops = traj.populations
    Path(paths["populations_svg"]).write_text(
        line_plot_svg([(f"|c{i + 1}|^2", t, pops[:, i]) for i in range(pops.shape[1])],
                      "State populations", "t", "population"), encoding="utf-8")
    Path(paths["lyapunov_svg"]).write_text(
        line_plot_svg([("V", t, traj.lyapunov)], "Lyapunov function", "t", "V"), encoding="utf-8")
    Path(paths["controls_svg"]).write_text(
        line_plot_svg([(f"u{k + 1}", t, traj.controls[:, k]) for k in range(traj.controls.shape[1])],
                      "Control signals", "t", "u"), encoding="utf-8")
