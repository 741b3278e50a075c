from __future__ import annotations
import math
from dataclasses import dataclass, field
import numpy as np
from app.models.estimates import GaussianEstimate

KMH_TO_MPS = 1.0 / 3.6


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class AdversaryState:
    """Pose of the adversary vehicle: position (m) and heading (rad)."""

    y1: float
    y2: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))


@dataclass(frozen=True)
class AdversaryScenario:
    """Unicycle adversary with a constant speed and a uniformly random turn rate."""

    initial_state: AdversaryState = field(default_factory=lambda: AdversaryState(49.0, 1.75, 0.0))
    speed_mps: float = 22.0 * KMH_TO_MPS
    horizon: int = 10
    sampling_time_s: float = 0.4
    length_m: float = 4.5
    width_m: float = 2.0
    turn_spread_rad: float = 0.66
    turn_cap_rad: float = math.pi / 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("speed_mps", "sampling_time_s", "length_m", "width_m"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon!r}")

    @property
    def turn_rate_bounds(self) -> tuple[float, float]:
        """Endpoints (pi -/+ spread) / (2 (N + 1)) of the per-step turn-rate interval."""
        scale = 2.0 * (self.horizon + 1)
        return (
            (math.pi - self.turn_spread_rad) / scale,
            (math.pi + self.turn_spread_rad) / scale,
        )


@dataclass(frozen=True)
class TrajectoryBatch:
    """Sampled adversary poses; row s is sample s, column t-1 is step t."""

    y1: np.ndarray
    y2: np.ndarray
    theta: np.ndarray

    def __post_init__(self) -> None:
        shapes = {np.shape(self.y1), np.shape(self.y2), np.shape(self.theta)}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise ValueError(f"trajectory arrays must share one 2-D shape, got {shapes}")

    @property
    def sample_count(self) -> int:
        return int(np.shape(self.y1)[0])

    @property
    def horizon(self) -> int:
        return int(np.shape(self.y1)[1])


@dataclass(frozen=True)
class UncertainFace:
    """Estimated coefficients d = [a; b] of face i of obstacle j at step t (t is 1-based)."""

    t: int
    j: int
    i: int
    estimate: GaussianEstimate


@dataclass(frozen=True)
class ObstacleFaceSet:
    """Every (t, j, i) face of every obstacle over the horizon."""

    horizon: int
    face_counts: tuple[int, ...]
    faces: dict[tuple[int, int, int], UncertainFace]
    position_selector: np.ndarray

    def __post_init__(self) -> None:
        selector = np.asarray(self.position_selector, dtype=float)
        if selector.ndim != 2:
            raise ValueError("position_selector must be a matrix")
        object.__setattr__(self, "position_selector", selector)
        object.__setattr__(self, "face_counts", tuple(int(f) for f in self.face_counts))
        if any(f < 1 for f in self.face_counts):
            raise ValueError(f"every obstacle needs at least one face, got {self.face_counts}")
        expected = selector.shape[0] + 1
        for key in self.keys():
            face = self.faces.get(key)
            if face is None:
                raise ValueError(f"face cell {key} is not populated")
            if face.estimate.dimension != expected:
                raise ValueError(
                    f"face {key} has dimension {face.estimate.dimension}, expected {expected}"
                )

    def keys(self) -> list[tuple[int, int, int]]:
        """Cells in (t, j, i) lexicographic order."""
        return [
            (t, j, i)
            for t in range(1, self.horizon + 1)
            for j, count in enumerate(self.face_counts)
            for i in range(count)
        ]

    def __getitem__(self, key: tuple[int, int, int]) -> UncertainFace:
        return self.faces[key]
