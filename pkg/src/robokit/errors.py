"""Exception types shared across the toolkit."""


class RobokitError(Exception):
    """Base class for toolkit-specific failures."""


class ConfigError(RobokitError, ValueError):
    """Config file failed validation; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class CapabilityError(RobokitError):
    """A subsystem was requested that the config disables or the backend lacks."""


class IkConvergenceError(RobokitError):
    """Inverse kinematics failed to converge; carries the best residuals seen."""

    def __init__(self, position_residual: float, orientation_residual: float, iterations: int):
        self.position_residual = position_residual
        self.orientation_residual = orientation_residual
        self.iterations = iterations
        super().__init__(
            f"IK did not converge after {iterations} iterations "
            f"(residual {position_residual:.3e} m / {orientation_residual:.3e} rad)"
        )


class ControlError(RobokitError):
    """Controller-level failure (singular Riccati step, unusable trajectory, ...)."""


class NoPathError(RobokitError):
    """Global planner found no collision-free path."""


class NoClustersError(RobokitError):
    """Push planning requires at least one cluster."""
