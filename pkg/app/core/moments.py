from __future__ import annotations
import logging
import math
import numpy as np
from app.core import statkit
from app.core.errors import DegenerateCovarianceError, InsufficientSamplesError
from app.models.estimates import (
    GaussianEstimate,
    Probability,
    SampleSet,
    check_positive_definite,
)

logger = logging.getLogger(__name__)


def _sample_moments(samples: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    data = samples.samples
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (samples.count - 1)
    return mean, 0.5 * (cov + cov.T)


def estimate(samples: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean (divisor N_s) and sample covariance (divisor N_s - 1)."""
    mean, cov = _sample_moments(samples)
    check_positive_definite(cov)
    return mean, cov


def _largest_eigenvalue(cov: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(cov)[-1])


def mean_radius(cov: np.ndarray, n: int, n_samples: int, beta: Probability | float) -> float:
    """Radius r1 bounding ||mu - mu_hat||_2 with confidence 1 - beta.

    Uses lambda_min(cov^-1) = 1 / lambda_max(cov).
    """
    beta = Probability.coerce(beta)
    if n_samples - 1 < n:
        raise InsufficientSamplesError(
            f"insufficient samples for dimension: N_s - 1 = {n_samples - 1} < n = {n}"
        )
    t2 = statkit.hotelling_t2_quantile(n, n_samples - 1, 1.0 - beta.value)
    return math.sqrt(_largest_eigenvalue(cov) * t2 / n_samples)


def _chi2_spread(n: int, n_samples: int, beta: Probability) -> float:
    """max{|1 - (N_s-1)/chi2_{N_s-1, 1-beta/(2n)}|, |1 - (N_s-1)/chi2_{N_s-1, beta/(2n)}|}."""
    dof = n_samples - 1
    tail = beta.value / (2 * n)
    upper = statkit.chi2_quantile(dof, 1.0 - tail)
    lower = statkit.chi2_quantile(dof, tail)
    return max(abs(1.0 - dof / upper), abs(1.0 - dof / lower))


def diagonal_radii(
    cov: np.ndarray, n: int, n_samples: int, beta: Probability | float
) -> np.ndarray:
    """Per-diagonal radii r_{2,i} bounding |Sigma_ii - Sigma_hat_ii|."""
    beta = Probability.coerce(beta)
    if n_samples < 2:
        raise InsufficientSamplesError(f"cov_radius needs N_s >= 2, got {n_samples}")
    return np.diag(cov) * _chi2_spread(n, n_samples, beta)


def cov_radius(
    cov: np.ndarray,
    n: int,
    n_samples: int,
    beta: Probability | float,
    diagonal_mode: bool = False,
) -> float:
    """Radius r2 bounding ||Sigma - Sigma_hat||_F with confidence 1 - beta."""
    radii = diagonal_radii(cov, n, n_samples, beta)
    total = float(np.sum(radii**2))
    if diagonal_mode:
        return math.sqrt(total)
    inflated = np.sqrt(np.diag(cov) + radii)
    cross = np.outer(inflated, inflated) + np.abs(cov)
    np.fill_diagonal(cross, 0.0)
    return math.sqrt(total + float(np.sum(cross**2)))


def cov_radius_unrooted(
    cov: np.ndarray, n: int, n_samples: int, beta: Probability | float
) -> float:
    """Diagonal-case radius in its printed form, sum of r_{2,i}^2 without the square root."""
    radii = diagonal_radii(cov, n, n_samples, beta)
    return float(np.sum(radii**2))


def build_estimate(
    samples: SampleSet,
    beta: Probability | float,
    diagonal_mode: bool = False,
    ridge: float = 0.0,
) -> GaussianEstimate:
    """Moments and both concentration radii for one sample set.

    In diagonal mode the off-diagonal entries of the covariance are zeroed
    before the radii are computed, and the zeroed matrix is the one stored.
    A positive ridge adds ridge * lambda_max * I before the gate.
    """
    beta = Probability.coerce(beta)
    if ridge < 0.0:
        raise ValueError(f"ridge must be nonnegative, got {ridge!r}")
    mean, cov = _sample_moments(samples)
    if diagonal_mode:
        cov = np.diag(np.diag(cov))
    if ridge > 0.0:
        cov = cov + ridge * max(_largest_eigenvalue(cov), 0.0) * np.eye(samples.dimension)
    try:
        check_positive_definite(cov)
    except DegenerateCovarianceError:
        logger.debug("degenerate covariance for %d samples of dimension %d", samples.count, samples.dimension)
        raise
    n = samples.dimension
    r1 = mean_radius(cov, n, samples.count, beta)
    r2 = cov_radius(cov, n, samples.count, beta, diagonal_mode)
    return GaussianEstimate(
        mean=mean,
        covariance=cov,
        sample_count=samples.count,
        r1=r1,
        r2=r2,
        beta=beta,
        diagonal_mode=diagonal_mode,
        ridge=ridge,
    )
