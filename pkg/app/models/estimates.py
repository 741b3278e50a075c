from __future__ import annotations
import math
from dataclasses import dataclass, field
import numpy as np
from app.core.errors import DegenerateCovarianceError

PD_RELATIVE_TOL = 1e-12


@dataclass(frozen=True)
class Probability:
    """A probability strictly inside (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        value = float(self.value)
        if not math.isfinite(value) or not 0.0 < value < 1.0:
            raise ValueError(f"Probability must lie in (0, 1), got {self.value!r}")
        object.__setattr__(self, "value", value)

    def __float__(self) -> float:
        return self.value

    @classmethod
    def coerce(cls, p: "Probability | float") -> "Probability":
        return p if isinstance(p, cls) else cls(float(p))


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def check_positive_definite(cov: np.ndarray) -> None:
    """Reject covariances whose smallest eigenvalue is not above 1e-12 of the largest."""
    eigenvalues = np.linalg.eigvalsh(cov)
    largest = float(eigenvalues[-1])
    smallest = float(eigenvalues[0])
    if largest <= 0.0 or smallest <= PD_RELATIVE_TOL * largest:
        raise DegenerateCovarianceError(
            f"degenerate covariance: eigenvalues span [{smallest:.3e}, {largest:.3e}]"
        )


@dataclass(frozen=True)
class SampleSet:
    """N_s i.i.d. samples of an n-dimensional random vector, one per row."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        if samples.ndim != 2:
            raise ValueError(f"samples must be a 2-D array, got shape {samples.shape}")
        if samples.shape[0] < 2:
            raise ValueError(
                f"at least 2 samples are needed for a covariance, got {samples.shape[0]}"
            )
        if samples.shape[1] < 1:
            raise ValueError("samples must have dimension at least 1")
        object.__setattr__(self, "samples", _frozen(samples))

    @property
    def dimension(self) -> int:
        return int(self.samples.shape[1])

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])


@dataclass(frozen=True)
class GaussianEstimate:
    """Sample moments of one uncertain face coefficient vector and their concentration radii."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int
    r1: float
    r2: float
    beta: Probability
    diagonal_mode: bool = False
    ridge: float = field(default=0.0)

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance must be symmetric")
        check_positive_definite(cov)
        if not (math.isfinite(self.r1) and self.r1 >= 0.0):
            raise ValueError(f"r1 must be finite and nonnegative, got {self.r1!r}")
        if not (math.isfinite(self.r2) and self.r2 >= 0.0):
            raise ValueError(f"r2 must be finite and nonnegative, got {self.r2!r}")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "covariance", _frozen(0.5 * (cov + cov.T)))
        object.__setattr__(self, "beta", Probability.coerce(self.beta))
        object.__setattr__(self, "r1", float(self.r1))
        object.__setattr__(self, "r2", float(self.r2))

    @property
    def dimension(self) -> int:
        return int(self.mean.size)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "sample_count": self.sample_count,
            "r1": self.r1,
            "r2": self.r2,
            "beta": self.beta.value,
            "diagonal_mode": self.diagonal_mode,
            "ridge": self.ridge,
        }
