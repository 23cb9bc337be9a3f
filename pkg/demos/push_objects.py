"""The full pushing pipeline on a synthetic one-cube scene.

Steps: park the arm out of the camera view, render a point cloud, drop floor
and far points, cluster the xy-projection with DBSCAN, pick a push point on
the chosen cluster's bounding box, then execute hover -> descend -> sweep.
The sweep runs through the cluster centroid to twice the center distance.
"""

import numpy as np

from robokit import SimBackend, load_config, load_scene, make_robot
from robokit.config import bundled_config_dir
from robokit.skills import push_pipeline

config = load_config("locobot")
scene = load_scene(bundled_config_dir() / "push_scene.yaml")
robot = make_robot(config, SimBackend(config, seed=7, scene=scene))

plan, result, artifacts = push_pipeline(robot, seed=7)

print(f"cloud: {len(artifacts['cloud'])} points rendered, "
      f"{len(artifacts['filtered'])} after floor/range filtering")
labels = artifacts["labels"]
n_clusters = len(set(labels[labels >= 0]))
print(f"clusters found: {n_clusters} ({np.sum(labels < 0)} noise points)")
print(f"push point   : {np.round(plan.push_pt, 4)}")
print(f"pre-push     : {np.round(plan.pre_push_pt, 4)}")
print(f"cluster center: {np.round(plan.obj_center, 4)}")
print(f"sweep vector : {np.round(result.displacement, 4)} "
      f"(exactly twice center-minus-push, z zeroed)")
print("phases:")
for name, ok in result.phases:
    print(f"  {name:14s} {'ok' if ok else 'FAILED'}")
print(f"pipeline {'completed' if result.reached else 'aborted: ' + result.detail} "
      f"in {result.elapsed:.1f} s simulated")
