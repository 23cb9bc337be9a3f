"""Unified robot facade: one handle exposing arm/base/camera/gripper subsystems
over a pluggable backend.

Motion commands are blocking and step the control loop in lockstep with the
simulator. The base closes its loop on the odometric pose; ground truth is
only read out for benchmarking. Facade and config objects are immutable after
construction; backends must be externally synchronized if shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RobotConfig
from .control import (DwaParams, ProportionalController, RateLimiter,
                      dwa_step, lqr_backward_pass, lqr_track_step, tracking_error)
from .errors import CapabilityError, IkConvergenceError
from .geometry import SE3, Pose2D, angle_diff, planar_distance, zyx_from_quat
from .kinematics import inverse_kinematics, pose_from_pitch_roll
from .trajectory import (ControlCommand, TimedTrajectory, generate_sharp_trajectory,
                         generate_smooth_trajectory)

SUBSYSTEM_NAMES = ("arm", "base", "camera", "gripper")


@dataclass
class MotionResult:
    """Outcome of a blocking motion command."""

    reached: bool
    elapsed: float = 0.0
    pose: Pose2D | None = None        # final odometric pose (base motions)
    true_pose: Pose2D | None = None   # ground-truth pose (the mocap stand-in)
    joints: np.ndarray | None = None
    ee_pose: SE3 | None = None
    phases: list = field(default_factory=list)      # (name, ok) pairs
    commands: list = field(default_factory=list)    # emitted ControlCommands
    path: list = field(default_factory=list)        # attained ee positions (arm moves)
    displacement: np.ndarray | None = None          # commanded Cartesian displacement
    detail: str = ""


@dataclass(frozen=True)
class TrackingEntry:
    reference: Pose2D
    odom: Pose2D
    true: Pose2D
    command: ControlCommand


class BaseInterface:
    """Differential-drive base: position control and trajectory tracking."""

    def __init__(self, config: RobotConfig, backend):
        self._config = config
        self._sim = backend.base_sim
        self._settings = config.base

    @property
    def odom_pose(self) -> Pose2D:
        return self._sim.odom_pose

    @property
    def true_pose(self) -> Pose2D:
        return self._sim.true_pose

    def _within_tolerance(self, pose: Pose2D, target: Pose2D,
                          pos_tol: float, head_tol: float) -> bool:
        return (planar_distance(pose, target) <= pos_tol
                and abs(angle_diff(pose.theta, target.theta)) <= head_tol)

    def _settle(self, commands: list) -> None:
        # ramp the commanded velocity to zero so the next motion starts from rest
        while self._sim.velocity.v != 0.0 or self._sim.velocity.omega != 0.0:
            cmd = ControlCommand(0.0, 0.0)
            commands.append(cmd)
            self._sim.step(cmd, self._settings.dt)

    def go_to_absolute(self, target, controller: str = "lqr",
                       grid=None) -> MotionResult:
        """Drive to an odometric-frame target pose; blocks until tolerance or timeout."""
        target = target if isinstance(target, Pose2D) else Pose2D.from_array(target)
        params = self._config.controller_params(controller)
        if controller == "proportional":
            return self._run_proportional(target, params)
        if controller == "lqr":
            return self._run_lqr(target, params)
        if controller == "dwa":
            return self._run_dwa(target, params, grid)
        raise KeyError(f"unknown controller {controller!r}")

    def go_to_relative(self, rel, controller: str = "lqr", grid=None) -> MotionResult:
        """Target expressed in the current odometric frame, composed under SE(2)."""
        rel = rel if isinstance(rel, Pose2D) else Pose2D.from_array(rel)
        return self.go_to_absolute(self.odom_pose.compose(rel), controller, grid)

    def _result(self, target: Pose2D, pos_tol: float, head_tol: float, t0: float,
                commands: list, detail: str = "") -> MotionResult:
        reached = self._within_tolerance(self.odom_pose, target, pos_tol, head_tol)
        return MotionResult(reached=reached, elapsed=self._sim.time - t0,
                            pose=self.odom_pose, true_pose=self.true_pose,
                            commands=commands,
                            detail=detail or ("" if reached else "timeout"))

    def _run_proportional(self, target: Pose2D, params) -> MotionResult:
        s = self._settings
        ctl = ProportionalController(target, params, s.limits, s.dt)
        t0 = self._sim.time
        commands: list = []
        while self._sim.time - t0 < s.timeout and not ctl.done:
            cmd = ctl.step(self.odom_pose)
            if ctl.done:
                break
            commands.append(cmd)
            self._sim.step(cmd, s.dt)
        self._settle(commands)
        return self._result(target, s.position_tolerance, s.heading_tolerance, t0, commands)

    def _reference_trajectory(self, target: Pose2D, params) -> TimedTrajectory:
        gen = (generate_smooth_trajectory if params.trajectory == "smooth"
               else generate_sharp_trajectory)
        return gen(self.odom_pose, target, self._settings.limits, self._settings.dt)

    def _run_lqr(self, target: Pose2D, params) -> MotionResult:
        s = self._settings
        t0 = self._sim.time
        commands: list = []
        traj = self._reference_trajectory(target, params)
        limiter = RateLimiter(s.limits, s.dt)
        if traj.horizon > 0:
            gains = lqr_backward_pass(traj, params.weights())
            for t in range(traj.horizon):
                if self._sim.time - t0 >= s.timeout:
                    break
                cmd = limiter.apply(lqr_track_step(self.odom_pose, t, traj, gains, s.limits))
                commands.append(cmd)
                self._sim.step(cmd, s.dt)
            K_final = gains.gains[-1]
        else:
            K_final = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 1.5]])
        while (self._sim.time - t0 < s.timeout
               and not self._within_tolerance(self.odom_pose, target,
                                              s.position_tolerance, s.heading_tolerance)):
            e = tracking_error(self.odom_pose, target)
            u = -K_final @ e
            cmd = limiter.apply(ControlCommand(u[0], u[1]).clamped(s.limits.v_max,
                                                                   s.limits.omega_max))
            commands.append(cmd)
            self._sim.step(cmd, s.dt)
        self._settle(commands)
        return self._result(target, s.position_tolerance, s.heading_tolerance, t0, commands)

    def _run_dwa(self, target: Pose2D, params: DwaParams, grid) -> MotionResult:
        s = self._settings
        t0 = self._sim.time
        commands: list = []
        limiter = RateLimiter(s.limits, s.dt)
        blocked = False
        while self._sim.time - t0 < s.timeout:
            if planar_distance(self.odom_pose, target) <= params.position_tolerance:
                break
            decision = dwa_step(self.odom_pose, limiter.current, target, grid,
                                params, s.limits, s.dt)
            if decision.blocked:
                blocked = True
                break
            cmd = limiter.apply(decision.command)
            commands.append(cmd)
            self._sim.step(cmd, s.dt)
        if not blocked:
            while self._sim.time - t0 < s.timeout:
                err = angle_diff(target.theta, self.odom_pose.theta)
                if abs(err) <= params.heading_tolerance:
                    break
                cmd = limiter.apply(ControlCommand(0.0, 3.0 * err)
                                    .clamped(s.limits.v_max, s.limits.omega_max))
                commands.append(cmd)
                self._sim.step(cmd, s.dt)
        self._settle(commands)
        result = self._result(target, params.position_tolerance, params.heading_tolerance,
                              t0, commands, detail="all DWA samples blocked" if blocked else "")
        if blocked:
            result.reached = False
        return result

    def track_trajectory(self, traj: TimedTrajectory, controller: str = "lqr") -> list:
        """Run the chosen feedback law along `traj`; returns one TrackingEntry per step."""
        s = self._settings
        params = self._config.controller_params(controller)
        log: list[TrackingEntry] = []
        limiter = RateLimiter(s.limits, s.dt)
        if controller == "lqr":
            if traj.horizon == 0:
                return log
            gains = lqr_backward_pass(traj, params.weights())
            for t in range(traj.horizon):
                ref = traj.state(t)
                cmd = limiter.apply(lqr_track_step(self.odom_pose, t, traj, gains, s.limits))
                log.append(TrackingEntry(ref, self.odom_pose, self.true_pose, cmd))
                self._sim.step(cmd, s.dt)
            return log
        if controller == "proportional":
            for t in range(traj.horizon):
                ref = traj.state(t)
                pose = self.odom_pose
                dist = planar_distance(pose, ref)
                # chase the moving reference point; adopt its heading when close
                if dist > 0.05:
                    heading_target = math.atan2(ref.y - pose.y, ref.x - pose.x)
                else:
                    heading_target = ref.theta
                cmd = ControlCommand(params.kp_lin * dist,
                                     params.kp_ang * angle_diff(heading_target, pose.theta))
                cmd = limiter.apply(cmd.clamped(s.limits.v_max, s.limits.omega_max))
                log.append(TrackingEntry(ref, pose, self.true_pose, cmd))
                self._sim.step(cmd, s.dt)
            return log
        raise KeyError(f"unknown tracking controller {controller!r}")


class ArmInterface:
    """Serial arm: joint-space and Cartesian motion through the backend simulator."""

    def __init__(self, config: RobotConfig, backend):
        self._config = config
        self._sim = backend.arm_sim
        self._chain = config.chain
        self._ik = config.ik
        self._dt = 0.05

    @property
    def joint_positions(self) -> np.ndarray:
        return self._sim.q.copy()

    @property
    def ee_pose(self) -> SE3:
        return self._sim.ee_pose()

    @property
    def dof(self) -> int:
        return self._chain.dof

    def named_pose(self, name: str) -> np.ndarray:
        if name == "home":
            return self._config.home.copy()
        return self._config.named_poses[name].copy()

    def set_joint_positions(self, q) -> MotionResult:
        """Blocking joint move; the result carries the attained end-effector pose."""
        t0 = self._sim.time
        attained = self._sim.settle(np.asarray(q, dtype=float), self._dt)
        return MotionResult(reached=True, elapsed=self._sim.time - t0,
                            joints=attained, ee_pose=self._sim.ee_pose())

    def go_home(self) -> MotionResult:
        return self.set_joint_positions(self._config.home)

    def solve_pitch_roll(self, position, pitch: float, roll: float) -> np.ndarray:
        """IK for a position + pitch + roll target (yaw follows the bearing)."""
        target = pose_from_pitch_roll(position, pitch, roll)
        return inverse_kinematics(self._chain, target, self._sim.q, self._ik)

    def set_ee_pose_pitch_roll(self, position, pitch: float, roll: float) -> MotionResult:
        """Move the end effector to a position with given pitch/roll; raises IkConvergenceError."""
        q = self.solve_pitch_roll(position, pitch, roll)
        return self.set_joint_positions(q)

    def set_ee_position(self, position) -> MotionResult:
        """Position-only move (orientation free); used for redundant point targets."""
        target = SE3(np.asarray(position, dtype=float))
        q = inverse_kinematics(self._chain, target, self._sim.q, self._ik, position_only=True)
        return self.set_joint_positions(q)

    def move_ee_xyz(self, displacement, step: float = 0.01) -> MotionResult:
        """Straight-line Cartesian displacement executed through per-waypoint IK.

        Waypoints are spaced at most `step` apart and solved seeded by the
        previous solution. Chains with fewer than 6 DOF hold the current
        pitch/roll and let yaw follow the waypoint bearing; full-DOF chains
        hold the entire orientation. An IK failure aborts with the waypoint
        index reached.
        """
        if step <= 0:
            raise ValueError("step must be positive")
        displacement = np.asarray(displacement, dtype=float)
        if displacement.shape != (3,):
            raise ValueError("displacement must be a 3-vector")
        t0 = self._sim.time
        start_pose = self.ee_pose
        dist = float(np.linalg.norm(displacement))
        path = [start_pose.translation.copy()]
        if dist < 1e-12:
            return MotionResult(reached=True, elapsed=0.0, joints=self.joint_positions,
                                ee_pose=start_pose, path=path)
        n = max(1, int(math.ceil(dist / step)))
        yaw, pitch, roll = zyx_from_quat(start_pose.rotation)
        seed = self._sim.q.copy()
        pitch_roll_mode = self._chain.dof < 6
        for i in range(1, n + 1):
            waypoint = start_pose.translation + displacement * (i / n)
            if pitch_roll_mode:
                target = pose_from_pitch_roll(waypoint, pitch, roll)
            else:
                target = SE3(waypoint, start_pose.rotation)
            try:
                q = inverse_kinematics(self._chain, target, seed, self._ik)
            except IkConvergenceError as exc:
                return MotionResult(reached=False, elapsed=self._sim.time - t0,
                                    joints=self.joint_positions, ee_pose=self.ee_pose,
                                    path=path,
                                    detail=f"IK failed at waypoint {i}/{n}: {exc}")
            self._sim.settle(q, self._dt)
            path.append(self._sim.ee_pose().translation.copy())
            seed = q
        return MotionResult(reached=True, elapsed=self._sim.time - t0,
                            joints=self.joint_positions, ee_pose=self.ee_pose, path=path,
                            displacement=displacement.copy())


class CameraInterface:
    def __init__(self, config: RobotConfig, backend):
        self._sim = backend.camera_sim
        self.intrinsics = config.camera.intrinsics

    def set_pan_tilt(self, pan: float, tilt: float) -> None:
        self._sim.set_pan_tilt(pan, tilt)

    @property
    def pan_tilt(self) -> tuple[float, float]:
        return (self._sim.pan, self._sim.tilt)

    def pose(self) -> SE3:
        """Camera optical frame expressed in the robot base frame."""
        return self._sim.pose()

    def get_point_cloud(self):
        """Base-frame point cloud of the attached scene with {floor, object} tags."""
        return self._sim.render()


class GripperInterface:
    def __init__(self, backend):
        self._sim = backend.gripper_sim

    def open(self) -> None:
        self._sim.open()

    def close(self) -> None:
        self._sim.close()

    @property
    def is_closed(self) -> bool:
        return self._sim.closed


class Robot:
    """Config-driven handle; subsystem accessors exist iff the config enables them."""

    def __init__(self, config: RobotConfig, backend):
        missing = []
        for name in SUBSYSTEM_NAMES:
            if getattr(config, f"use_{name}") and name not in backend.capabilities:
                missing.append(name)
        if missing:
            raise CapabilityError(
                f"config {config.name!r} enables {', '.join(missing)} but the backend "
                f"only provides {sorted(backend.capabilities)}")
        self.config = config
        self.backend = backend
        self._arm = ArmInterface(config, backend) if config.use_arm else None
        self._base = BaseInterface(config, backend) if config.use_base else None
        self._camera = CameraInterface(config, backend) if config.use_camera else None
        self._gripper = GripperInterface(backend) if config.use_gripper else None

    def _subsystem(self, name: str, value):
        if value is None:
            raise CapabilityError(f"subsystem {name!r} is disabled in config {self.config.name!r}")
        return value

    @property
    def arm(self) -> ArmInterface:
        return self._subsystem("arm", self._arm)

    @property
    def base(self) -> BaseInterface:
        return self._subsystem("base", self._base)

    @property
    def camera(self) -> CameraInterface:
        return self._subsystem("camera", self._camera)

    @property
    def gripper(self) -> GripperInterface:
        return self._subsystem("gripper", self._gripper)

    @property
    def sim_time(self) -> float:
        return self.backend.sim_time


def make_robot(config: RobotConfig, backend) -> Robot:
    """Build a robot handle; raises CapabilityError when the backend lacks an enabled subsystem."""
    return Robot(config, backend)
