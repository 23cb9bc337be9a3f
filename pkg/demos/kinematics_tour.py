"""Forward kinematics, the geometric Jacobian, and the numerical IK solver.

Walks the 5-DOF arm through: home pose, a finite-difference check of one
Jacobian column, an IK round trip, and the pitch/roll target convention
(yaw follows the base-to-target bearing on a 5-DOF chain).
"""

import math

import numpy as np

from robokit import load_config
from robokit.geometry import pose_error
from robokit.kinematics import (forward_kinematics, inverse_kinematics, jacobian,
                                pose_from_pitch_roll)

config = load_config("locobot")
chain = config.chain

home = forward_kinematics(chain, config.home)
print(f"home pose (all joints zero): ee at {np.round(home.translation, 4)}")

# one Jacobian column vs central finite differences
q = np.array([0.3, 0.5, -0.8, 0.4, 0.2])
J = jacobian(chain, q)
h = 1e-6
qp, qm = q.copy(), q.copy()
qp[1] += h
qm[1] -= h
fd = (forward_kinematics(chain, qp).translation
      - forward_kinematics(chain, qm).translation) / (2 * h)
print(f"shoulder linear Jacobian column: {np.round(J[:3, 1], 6)}")
print(f"central finite difference:       {np.round(fd, 6)}")

# IK round trip: target taken from a known joint configuration
target = forward_kinematics(chain, np.array([0.7, 0.4, 0.9, -0.5, 1.0]))
solution = inverse_kinematics(chain, target, config.home, config.ik)
dp, dori = pose_error(target, forward_kinematics(chain, solution))
print(f"\nIK round trip: position residual {np.linalg.norm(dp):.2e} m, "
      f"orientation residual {np.linalg.norm(dori):.2e} rad")
print(f"solution joints: {np.round(solution, 4)}")

# the pitch/roll convention used by the grasp and push skills
top_down = pose_from_pitch_roll([0.3, 0.1, 0.2], math.pi / 2, 0.0)
q_td = inverse_kinematics(chain, top_down, config.home, config.ik)
ee = forward_kinematics(chain, q_td)
approach = ee.rotate_vector([1.0, 0.0, 0.0])
print(f"\ntop-down target at (0.3, 0.1, 0.2): approach axis {np.round(approach, 5)} "
      f"(straight down), waist {q_td[0]:.4f} rad = bearing {math.atan2(0.1, 0.3):.4f} rad")
