"""Back-project an image-space grasp to a 3D pose and execute it top-down.

A grasp predictor (not included — any source of pixel + angle works) hands us
(u, v, angle); the depth image supplies Z along the optical axis. The pinhole
intrinsics and the camera extrinsics turn that into a base-frame position and
a gripper roll; execution hovers at the pre-grasp height, descends, and
closes the gripper.
"""

import math

import numpy as np

from robokit import SimBackend, load_config, make_robot
from robokit.skills import ImageGrasp, backproject_grasp, execute_grasp

config = load_config("locobot")
robot = make_robot(config, SimBackend(config, seed=7))

robot.arm.set_joint_positions(robot.arm.named_pose("reset"))
robot.camera.set_pan_tilt(0.0, 0.8)

grasp = ImageGrasp(u=320.0, v=430.0, angle=0.3, depth=0.639)
position, roll = backproject_grasp(grasp, config.camera.intrinsics, robot.camera.pose())
print(f"image grasp (u={grasp.u}, v={grasp.v}, angle={grasp.angle} rad, "
      f"depth={grasp.depth} m)")
print(f"-> base-frame position {np.round(position, 4)}, gripper roll {roll:.3f} rad")

result = execute_grasp(robot, position, roll)
print(f"pre-grasp at z={config.skills.pregrasp_height} m, "
      f"grasp at z={config.skills.grasp_height} m, pitch pi/2 (top-down)")
for name, ok in result.phases:
    print(f"  {name:14s} {'ok' if ok else 'FAILED'}")
print(f"gripper closed: {robot.gripper.is_closed}; "
      f"final ee at {np.round(result.ee_pose.translation, 4)}")
