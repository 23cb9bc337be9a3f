"""Rerun the base position-control accuracy experiment and print the table.

Protocol: linear (+-2 m), on-spot rotation (+-pi/2), combined ([1,1,0] and
[-1,-1,0]), 5 trials each, per controller, on a fresh seeded simulator per
trial. Errors are reported against both the ground-truth pose (the simulated
motion-capture reference) and the odometric pose the controllers actually
close their loop on.
"""

from pathlib import Path

from robokit import load_config, sim_backend_factory
from robokit.benchmark import run_base_benchmark
from robokit.report import write_base_report

config = load_config("locobot")
report = run_base_benchmark(config, sim_backend_factory(config),
                            ("lqr", "proportional", "dwa"), master_seed=7)

out = Path(__file__).parent / "out" / "base_benchmark"
files = write_base_report(report, out)
print((out / "summary.txt").read_text())
print(f"full per-trial data: {files[0]}")
