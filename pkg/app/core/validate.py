"""Monte Carlo certification of planned trajectories and the scalar robustness study."""
from __future__ import annotations
import logging
import math
from collections import defaultdict
from typing import Mapping
import numpy as np
from app.core import moments, statkit
from app.core.adversary import inflated_faces, sample_trajectories
from app.models.estimates import Probability, SampleSet
from app.models.planning import Cell
from app.models.reports import CoverageReport, Example1Result, ViolationReport
from app.models.scenario import AdversaryScenario

logger = logging.getLogger(__name__)

EXAMPLE1_MODES = ("naive", "robust")
# realizations drawn per batch; bounds the (S, N, 4, 3) face array
BATCH_SIZE = 10_000


def _augment(positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2:
        raise ValueError(f"positions must have shape (N, n_p), got {positions.shape}")
    return np.hstack([positions, np.ones((positions.shape[0], 1))])


def empirical_violation(
    positions: np.ndarray,
    scenario: AdversaryScenario,
    realizations: int,
    seed: int,
    ego_length_m: float,
    ego_width_m: float,
    inflation: str = "axis",
    convention: str = "printed",
) -> ViolationReport:
    """Share of fresh adversary draws in which some step has the ego inside all four faces.

    Realization k is drawn with seed + k, so the report does not depend on
    the batch size.
    """
    augmented = _augment(positions)
    if augmented.shape[0] != scenario.horizon:
        raise ValueError(
            f"trajectory has {augmented.shape[0]} steps, scenario horizon is {scenario.horizon}"
        )
    if realizations < 1:
        raise ValueError(f"realizations must be positive, got {realizations}")
    violations = 0
    per_step = np.zeros(scenario.horizon, dtype=int)
    for start in range(0, realizations, BATCH_SIZE):
        count = min(BATCH_SIZE, realizations - start)
        batch = sample_trajectories(scenario, count, base_seed=seed + start)
        faces = inflated_faces(batch, scenario, ego_length_m, ego_width_m, inflation, convention)
        values = np.einsum("snfk,nk->snf", faces, augmented)
        inside = np.all(values <= 0.0, axis=2)
        violations += int(np.count_nonzero(inside.any(axis=1)))
        per_step += inside.sum(axis=0)
    report = ViolationReport(realizations=realizations, violations=violations, per_step=per_step, seed=seed)
    logger.info(
        "empirical violation %.5f (%d of %d realizations, seed %d)",
        report.probability, violations, realizations, seed,
    )
    return report


def gaussian_face_violation(
    positions: np.ndarray,
    truth: Mapping[Cell, tuple[np.ndarray, np.ndarray]],
    realizations: int,
    seed: int,
) -> ViolationReport:
    """Violation rate when every face vector is drawn from its known Gaussian.

    ``positions[t - 1]`` is the constrained position at step t. A realization
    violates when, at some step, some obstacle has all its faces <= 0.
    """
    augmented = _augment(positions)
    horizon = augmented.shape[0]
    if realizations < 1:
        raise ValueError(f"realizations must be positive, got {realizations}")
    inside: dict[tuple[int, int], np.ndarray] = defaultdict(lambda: np.ones(realizations, dtype=bool))
    for (t, j, i), (mean, cov) in sorted(truth.items()):
        if not 1 <= t <= horizon:
            raise ValueError(f"face cell {(t, j, i)} lies outside the horizon {horizon}")
        rng = np.random.default_rng([seed, t, j, i])
        draws = rng.multivariate_normal(np.asarray(mean, dtype=float), np.asarray(cov, dtype=float), realizations)
        inside[(t, j)] = inside[(t, j)] & (draws @ augmented[t - 1] <= 0.0)
    per_step = np.zeros(horizon, dtype=int)
    hit = np.zeros(realizations, dtype=bool)
    for t in range(1, horizon + 1):
        step = np.zeros(realizations, dtype=bool)
        for (step_t, _), cells in inside.items():
            if step_t == t:
                step |= cells
        per_step[t - 1] = int(np.count_nonzero(step))
        hit |= step
    return ViolationReport(
        realizations=realizations, violations=int(np.count_nonzero(hit)), per_step=per_step, seed=seed
    )


def example1_compare(
    n_samples: int,
    trials: int,
    beta: Probability | float,
    seed: int,
    epsilon: float = 0.05,
) -> dict[str, Example1Result]:
    """Naive and robust optima of min x s.t. Pr(x >= delta) >= 1 - eps, delta ~ N(0, 1).

    Trial k samples delta with seed + k and both modes share those samples.
    The true satisfaction probability of each optimum is Phi(x*).
    """
    beta = Probability.coerce(beta)
    if n_samples < 2:
        raise ValueError(f"n_samples must be at least 2, got {n_samples}")
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    quantile = statkit.normal_inv_cdf(1.0 - epsilon)
    naive = np.empty(trials)
    robust = np.empty(trials)
    for trial in range(trials):
        draws = np.random.default_rng(seed + trial).standard_normal(n_samples)
        mean = float(np.mean(draws))
        variance = float(np.var(draws, ddof=1))
        cov = np.array([[variance]])
        r1 = moments.mean_radius(cov, 1, n_samples, beta)
        r2 = moments.cov_radius(cov, 1, n_samples, beta)
        naive[trial] = mean + quantile * math.sqrt(variance)
        robust[trial] = mean + r1 + quantile * math.sqrt(variance + r2)
    results = {}
    for mode, x_star in (("naive", naive), ("robust", robust)):
        results[mode] = Example1Result(
            mode=mode,
            sample_count=n_samples,
            beta=beta.value,
            epsilon=epsilon,
            seed=seed,
            x_star=x_star,
            true_probability=np.array([statkit.normal_cdf(x) for x in x_star]),
        )
        logger.info(
            "example1 %s: N_s=%d, %d trials, violation fraction %.4f, mean x* %.5f",
            mode, n_samples, trials, results[mode].violation_fraction, results[mode].mean_x_star,
        )
    return results


def example1(
    n_samples: int,
    trials: int,
    beta: Probability | float,
    mode: str,
    seed: int,
    epsilon: float = 0.05,
) -> Example1Result:
    if mode not in EXAMPLE1_MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {EXAMPLE1_MODES}")
    return example1_compare(n_samples, trials, beta, seed, epsilon)[mode]


def _ground_truth(dimension: int, rng: np.random.Generator, diagonal_mode: bool) -> tuple[np.ndarray, np.ndarray]:
    mean = rng.normal(size=dimension)
    if diagonal_mode:
        return mean, np.diag(rng.uniform(0.5, 2.0, size=dimension))
    factor = rng.normal(size=(dimension, dimension))
    return mean, factor @ factor.T / dimension + 0.5 * np.eye(dimension)


def concentration_coverage(
    dimension: int,
    n_samples: int,
    beta: Probability | float,
    trials: int,
    seed: int,
    diagonal_mode: bool = False,
    truth: tuple[np.ndarray, np.ndarray] | None = None,
) -> CoverageReport:
    """Fraction of trials with ||mu - mu_hat|| <= r1 and ||Sigma - Sigma_hat||_F <= r2.

    Without ``truth`` the Gaussian is drawn from ``seed``.
    """
    beta = Probability.coerce(beta)
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if truth is None:
        mean, cov = _ground_truth(dimension, np.random.default_rng(seed), diagonal_mode)
    else:
        mean, cov = (np.asarray(part, dtype=float) for part in truth)
        if mean.shape != (dimension,) or cov.shape != (dimension, dimension):
            raise ValueError(
                f"truth has shapes {mean.shape} and {cov.shape}, expected dimension {dimension}"
            )
    mean_hits = 0
    cov_hits = 0
    for trial in range(trials):
        rng = np.random.default_rng(seed + 1 + trial)
        samples = SampleSet(rng.multivariate_normal(mean, cov, n_samples))
        estimate = moments.build_estimate(samples, beta, diagonal_mode)
        mean_hits += int(np.linalg.norm(mean - estimate.mean) <= estimate.r1)
        cov_hits += int(np.linalg.norm(cov - estimate.covariance, "fro") <= estimate.r2)
    report = CoverageReport(
        dimension=dimension,
        sample_count=n_samples,
        beta=beta.value,
        trials=trials,
        mean_hits=mean_hits,
        cov_hits=cov_hits,
        seed=seed,
        diagonal_mode=diagonal_mode,
    )
    logger.info(
        "coverage n=%d N_s=%d beta=%g: mean %.4f, covariance %.4f",
        dimension, n_samples, beta.value, report.mean_coverage, report.cov_coverage,
    )
    return report
