from __future__ import annotations


class PlannerError(Exception):
    """Base class for errors raised by the planner."""


class InsufficientSamplesError(PlannerError, ValueError):
    """Raised when the sample count cannot support the requested dimension."""


class DegenerateCovarianceError(PlannerError, ValueError):
    """Raised when a covariance estimate fails the positive-definiteness gate."""


class ConfigError(PlannerError, ValueError):
    """Raised when a run configuration does not match the schema."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SolverError(PlannerError, RuntimeError):
    """Raised when the conic backend fails numerically on a node."""

    def __init__(self, message: str, node: int | None = None) -> None:
        super().__init__(message if node is None else f"node {node}: {message}")
        self.node = node
