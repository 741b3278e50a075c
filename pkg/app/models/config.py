from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field
from typing import Any
from app.models.scenario import KMH_TO_MPS

PLANNER_MODES = ("known", "robust")
PLANNING_FRAMES = ("adversary", "world")
COVARIANCE_MODES = ("full", "diagonal")


@dataclass(frozen=True)
class ScenarioConfig:
    """Adversary block, in SI units."""

    y1_m: float = 49.0
    y2_m: float = 1.75
    theta_rad: float = 0.0
    speed_mps: float = 22.0 * KMH_TO_MPS
    length_m: float = 4.5
    width_m: float = 2.0
    turn_spread_rad: float = 0.66
    turn_cap_rad: float = math.pi / 2.0


@dataclass(frozen=True)
class BigMConfig:
    floor: float = 1e4
    inflation: float = 2.0
    value: float | None = None


@dataclass(frozen=True)
class PlannerConfig:
    """Planner block; velocities stored in m/s, inputs in m/s^2."""

    epsilon: float = 0.05
    beta: float = 1e-3
    horizon: int = 10
    sampling_time_s: float = 0.4
    samples: int = 5000
    mode: str = "robust"
    covariance_mode: str = "full"
    covariance_ridge: float = 1e-9
    inflation: str = "axis"
    face_convention: str = "printed"
    """``printed`` rotates the adversary box against its turn direction: the long-axis
    normal is (cos theta, -sin theta), so a left turn tilts the box to the right.
    ``heading_aligned`` uses (cos theta, sin theta). Both agree at theta = 0 and pi."""
    frame: str = "adversary"
    """Coordinates the program is built in. ``adversary`` moves the adversary start to
    the origin and plans there; outputs are translated back to world coordinates."""
    risk_allocation: str = "uniform"
    trajectories_csv: str | None = None
    ego_initial_state: tuple[float, float, float, float] = (0.0, 1.75, 50.0 * KMH_TO_MPS, 0.0)
    ego_length_m: float = 4.5
    ego_width_m: float = 2.0
    lane_lower_m: float = 0.0
    lane_upper_m: float = 3.5
    forward_speed_mps: float = 40.0 * KMH_TO_MPS
    lateral_speed_mps: float = 20.0 * KMH_TO_MPS
    input_lower: tuple[float, float] = (-3.0, -5.0)
    input_upper: tuple[float, float] = (10.0, 5.0)
    big_m: BigMConfig = field(default_factory=BigMConfig)


@dataclass(frozen=True)
class SolverConfig:
    gap_tol: float = 1e-6
    integrality_tol: float = 1e-6
    node_limit: int = 100_000
    backend: str = "CLARABEL"


@dataclass(frozen=True)
class ValidationConfig:
    realizations: int = 100_000
    trials: int = 10_000
    example1_samples: int = 100
    repetitions: int = 20


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"


@dataclass(frozen=True)
class RunConfig:
    """Ingested run configuration; every seed derives from ``seed``."""

    seed: int = 0
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
