"""Gain grid search for the bundled five-level experiment.

Sweeps K over 21 log-spaced values in [0.01, 1] and measures, for each
initial global phase in {0, pi/4, pi/2, pi}, the settling time: the first
time after which the squared target fidelity stays >= 0.99 until the end of
the horizon. The gain with the smallest worst-case settling time wins; the
bundled config records the result.

Run:  python demos/tune_gain.py [--horizon 400] [--workers 8]
"""
import argparse
import itertools
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from qlyap import io
from qlyap.simulate import SimulationConfig, simulate

PHASES = (0.0, np.pi / 4, np.pi / 2, np.pi)


def settling_time(traj, threshold=0.99):
    bad = np.nonzero(traj.fidelity_to_target**2 < threshold)[0]
    if len(bad) == 0:
        return 0.0
    if bad[-1] == len(traj.times) - 1:
        return np.inf
    return float(traj.times[bad[-1] + 1])


def run_one(args):
    gain, phase, horizon = args
    exp = io.load_config(io.bundled_config_path("five_level.json"))
    cfg = exp.controller().with_gains([gain])
    sim = SimulationConfig(exp.simulation.dt, horizon, record_stride=10)
    traj = simulate(exp.system, cfg, sim, np.exp(1j * phase) * exp.initial, check=False)
    return gain, phase, settling_time(traj), float(traj.fidelity_to_target[-1] ** 2)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=float, default=400.0)
    ap.add_argument("--workers", type=int, default=8)
    args = ap.parse_args()

    gains = np.logspace(-2, 0, 21)
    jobs = [(g, p, args.horizon) for g, p in itertools.product(gains, PHASES)]
    with ProcessPoolExecutor(args.workers) as pool:
        results = list(pool.map(run_one, jobs))

    table = {}
    for gain, phase, t_settle, f2 in results:
        table.setdefault(gain, []).append((phase, t_settle, f2))
    print(f"{'K':>8}  " + "  ".join(f"settle(phi={p:.3f})" for p in PHASES) + "  worst")
    best = None
    for gain in gains:
        rows = table[gain]
        worst = max(t for _, t, _ in rows)
        print(f"{gain:8.4f}  " + "  ".join(f"{t:17.1f}" for _, t, _ in rows) + f"  {worst:7.1f}")
        if best is None or worst < best[1]:
            best = (gain, worst)
    print(f"\nselected K = {best[0]:.6g} (worst-case settling time {best[1]:.1f})")


if __name__ == "__main__":
    main()
