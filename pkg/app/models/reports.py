from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Any
import numpy as np


@dataclass(frozen=True)
class ViolationReport:
    """Monte Carlo count of realizations in which the ego box meets the adversary."""

    realizations: int
    violations: int
    per_step: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if self.realizations < 1:
            raise ValueError(f"realizations must be positive, got {self.realizations}")
        if not 0 <= self.violations <= self.realizations:
            raise ValueError(
                f"violation count {self.violations} is outside [0, {self.realizations}]"
            )
        object.__setattr__(self, "per_step", np.asarray(self.per_step, dtype=int))

    @property
    def probability(self) -> float:
        return self.violations / self.realizations

    def to_dict(self) -> dict[str, Any]:
        return {
            "realizations": self.realizations,
            "violations": self.violations,
            "probability": self.probability,
            "per_step": self.per_step.tolist(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Example1Result:
    """Per-trial optima of the scalar chance constraint Pr(x >= delta) >= 1 - eps."""

    mode: str
    sample_count: int
    beta: float
    epsilon: float
    seed: int
    x_star: np.ndarray
    true_probability: np.ndarray

    @property
    def trials(self) -> int:
        return int(self.x_star.size)

    @property
    def violated(self) -> np.ndarray:
        return self.true_probability < 1.0 - self.epsilon

    @property
    def violation_fraction(self) -> float:
        return float(np.mean(self.violated))

    @property
    def mean_x_star(self) -> float:
        return float(np.mean(self.x_star))

    def summary(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "sample_count": self.sample_count,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "trials": self.trials,
            "violation_fraction": self.violation_fraction,
            "mean_x_star": self.mean_x_star,
        }


@dataclass(frozen=True)
class CoverageReport:
    """How often the concentration radii cover the true mean and covariance."""

    dimension: int
    sample_count: int
    beta: float
    trials: int
    mean_hits: int
    cov_hits: int
    seed: int
    diagonal_mode: bool = False

    @property
    def mean_coverage(self) -> float:
        return self.mean_hits / self.trials

    @property
    def cov_coverage(self) -> float:
        return self.cov_hits / self.trials

    @property
    def slack(self) -> float:
        """Three binomial standard deviations at the target coverage."""
        return 3.0 * math.sqrt(self.beta * (1.0 - self.beta) / self.trials)

    @property
    def passed(self) -> bool:
        target = 1.0 - self.beta - self.slack
        return self.mean_coverage >= target and self.cov_coverage >= target

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "sample_count": self.sample_count,
            "beta": self.beta,
            "trials": self.trials,
            "mean_coverage": self.mean_coverage,
            "cov_coverage": self.cov_coverage,
            "slack": self.slack,
            "passed": self.passed,
            "seed": self.seed,
            "diagonal_mode": self.diagonal_mode,
        }
