"""Arm pose repeatability: repeated home-then-target moves, ISO-style metric.

Each repetition returns to the home pose first, then moves to the commanded
pose; attained end-effector positions are read from the simulator's ground
truth. The repeatability number per pose is RP = l_bar + 3 * S_l over the
distances of the attained points from their barycenter.
"""

from pathlib import Path

import numpy as np

from robokit import SimBackend, load_config
from robokit.benchmark import iso_position_repeatability, run_arm_repeatability
from robokit.report import write_repeatability_report

config = load_config("locobot")
backend = SimBackend(config, seed=7)
result = run_arm_repeatability(config, backend, master_seed=7)

print(f"{config.benchmark.repeatability_reps} repetitions per pose, "
      f"grid poses {list(config.benchmark.repeatability_poses)} plus home\n")
for pose in result.poses:
    sx, sy, sz = pose.axis_std_mm
    print(f"{pose.name:8s} std (mm): x {sx:.3f}  y {sy:.3f}  z {sz:.3f}   "
          f"RP {pose.rp_mm:.3f} mm")

# the metric on a hand-checkable example: three collinear points
pts = np.array([[0.0, 0, 0], [1.0, 0, 0], [-1.0, 0, 0]])
lbar, sl, rp = iso_position_repeatability(pts)
print(f"\nhand example (0,0,0)/(1,0,0)/(-1,0,0) mm: "
      f"l_bar={lbar:.4f}, S_l={sl:.4f}, RP={rp:.4f} mm (= 2/3 + sqrt(3))")

out = Path(__file__).parent / "out" / "repeatability"
write_repeatability_report(result, out)
print(f"report written to {out}")
