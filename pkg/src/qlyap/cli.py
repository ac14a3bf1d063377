"""Command line entry point: ``qlyap {check,simulate,compare,design-p}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .core import hermitian_eigendecompose
from .design import check_offdiagonal_condition
from .experiment import EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, check_report, compare_modes, run_experiment
from .simulate import SimulationAborted


def _load(args):
    path = args.config or io.bundled_config_path()
    return io.load_config(path)


def cmd_check(args) -> int:
    exp = _load(args)
    ok, lines, _ = check_report(exp, args.seed)
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_simulate(args) -> int:
    exp = _load(args)
    res = run_experiment(exp, args.out, args.seed, args.override_assumptions)
    sys.stdout.write(res.report)
    for name, path in res.paths.items():
        print(f"wrote {name}: {path}")
    return res.status


def cmd_compare(args) -> int:
    exp = _load(args)
    rows = compare_modes(exp, args.out, args.seed)
    print(f"{'mode':<18} {'final_fidelity':>15} {'min_V':>12} {'max_abs_u':>12}")
    for r in rows:
        print(f"{r.mode:<18} {r.final_fidelity:15.6f} {r.min_v:12.6g} {r.max_abs_u:12.6g}")
    if args.out:
        print(f"wrote {Path(args.out) / exp.outputs['comparison_csv']}")
        print(f"wrote {Path(args.out) / exp.outputs['comparison_svg']}")
    return EXIT_OK


def cmd_design_p(args) -> int:
    exp = _load(args)
    p = exp.build_p(args.seed)
    off = check_offdiagonal_condition(p, exp.system)
    doc = {
        "variant": exp.p_spec.variant,
        "matrix": io.matrix_to_json(p),
        "eigenvalues": [float(x) for x in hermitian_eigendecompose(p).eigenvalues],
        "offdiagonal_condition": {"satisfied": off.satisfied, "min_magnitude": off.min_magnitude},
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "p.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qlyap", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [
        ("check", cmd_check, "run assumption and P checks only"),
        ("simulate", cmd_simulate, "run the closed-loop experiment and write artifacts"),
        ("compare", cmd_compare, "compare the full law with its two reduced modes"),
        ("design-p", cmd_design_p, "print the weight operator P as JSON"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="experiment JSON (default: bundled five-level example)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="seed for a random P specification")
        p.add_argument("--override-assumptions", action="store_true",
                       help="simulate even if assumption checks fail")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.set_printoptions(suppress=True)
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationAborted as exc:
        print(f"simulator: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
