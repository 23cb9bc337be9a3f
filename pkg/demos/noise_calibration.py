"""How the shipped base-noise defaults were fitted.

The four multiplicative noise fractions cannot be measured from hardware at
desk scale, so they are calibrated against published aggregate error levels
for this robot class:

  1. the proportional controller's combined-motion translation error vs
     ground truth must land inside the 65 +- 52 mm band,
  2. the LQR controller must close its loop on odometry far better than on
     ground truth for linear motion (a few mm vs tens of mm),
  3. the per-class odometry-frame translation error ordering
     LQR <= proportional <= DWA must hold on >= 8 of master seeds 0..9.

This script scans candidate noise settings over master seeds 0..9 and prints
those three quantities; the shipped `locobot` defaults are the marked row.
Run time: a few minutes.
"""

import numpy as np

from robokit.backends import SimBackend
from robokit.benchmark import run_base_benchmark
from robokit.config import load_config
from robokit.sim import BaseNoiseModel

SEEDS = range(10)
CONTROLLERS = ("lqr", "proportional", "dwa")


def evaluate(config, noise: BaseNoiseModel):
    """(prop combined GT mean, lqr linear GT, lqr linear odo, per-class odo ordering hits)."""
    prop_combined, lqr_lin_gt, lqr_lin_odo = [], [], []
    order_hits = {"linear": 0, "rotation": 0, "combined": 0}
    for seed in SEEDS:
        def factory(trial_seed, _noise=noise):
            backend = SimBackend(config, seed=trial_seed)
            backend.base_sim.noise = _noise
            return backend

        report = run_base_benchmark(config, factory, CONTROLLERS, master_seed=seed)
        prop_combined.append(report.mean_error("proportional", "combined", "truth"))
        lqr_lin_gt.append(report.mean_error("lqr", "linear", "truth"))
        lqr_lin_odo.append(report.mean_error("lqr", "linear", "odometry"))
        for mclass in order_hits:
            e = [report.mean_error(c, mclass, "odometry") for c in CONTROLLERS]
            order_hits[mclass] += (e[0] <= e[1] + 1e-12 and e[1] <= e[2] + 1e-12)
    return (float(np.mean(prop_combined)), float(np.mean(lqr_lin_gt)),
            float(np.mean(lqr_lin_odo)), order_hits)


def main():
    config = load_config("locobot")
    candidates = [
        BaseNoiseModel(0.05, 0.05, 0.12, 0.06),
        BaseNoiseModel(0.08, 0.08, 0.18, 0.08),
        BaseNoiseModel(0.10, 0.10, 0.25, 0.10),
        BaseNoiseModel(0.08, 0.08, 0.30, 0.10),
        config.base_noise,  # shipped defaults
    ]
    print(f"{'actuation v/w':>16s} {'odometry v/w':>16s} {'prop comb GT mm':>16s} "
          f"{'lqr lin GT mm':>14s} {'lqr lin odo mm':>15s}  ordering hits/10 (lin/rot/comb)")
    for noise in candidates:
        pc, lg, lo, hits = evaluate(config, noise)
        mark = "  <- shipped" if noise == config.base_noise else ""
        print(f"{noise.actuation_v:>8.3f}/{noise.actuation_omega:<7.3f} "
              f"{noise.odometry_v:>8.3f}/{noise.odometry_omega:<7.3f} "
              f"{pc:>16.1f} {lg:>14.1f} {lo:>15.2f}  "
              f"{hits['linear']}/{hits['rotation']}/{hits['combined']}{mark}")
    print("\nband check: prop combined GT must lie in [13, 117] mm (65 +- 52).")


if __name__ == "__main__":
    main()
