"""Deterministic mixed-integer SOC rows for the joint chance constraint."""
from __future__ import annotations
import itertools
import logging
from dataclasses import replace
from typing import Callable, Sequence
import numpy as np
from app.core.statkit import normal_inv_cdf
from app.models.estimates import GaussianEstimate, check_positive_definite
from app.models.planning import (
    BinaryLayout,
    CardinalityRow,
    ConfidenceReport,
    RiskAllocation,
    SocRow,
)
from app.models.scenario import ObstacleFaceSet

logger = logging.getLogger(__name__)

DEFAULT_BIG_M_FLOOR = 1e4
DEFAULT_BIG_M_INFLATION = 2.0

RiskAllocator = Callable[[float, int, Sequence[int]], RiskAllocation]


def allocate_uniform(epsilon: float, horizon: int, face_counts: Sequence[int]) -> RiskAllocation:
    """Split the budget evenly: eps / (N * sum_j F_j) per face row."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon!r}")
    if horizon < 1 or not face_counts:
        raise ValueError("allocation needs a positive horizon and at least one obstacle")
    share = epsilon / (horizon * sum(face_counts))
    cells = {
        (t, j, i): share
        for t in range(1, horizon + 1)
        for j, count in enumerate(face_counts)
        for i in range(count)
    }
    return RiskAllocation(total=epsilon, cells=cells)


ALLOCATORS: dict[str, RiskAllocator] = {"uniform": allocate_uniform}


def get_allocator(name: str) -> RiskAllocator:
    try:
        return ALLOCATORS[name]
    except KeyError:
        raise ValueError(f"unknown risk allocation {name!r}, expected one of {sorted(ALLOCATORS)}") from None


def big_m_rows(face_counts: Sequence[int], horizon: int) -> BinaryLayout:
    """One binary per (t, j, i) face and one cardinality row per (t, j) disjunction."""
    cells: list[tuple[int, int, int]] = []
    rows: list[CardinalityRow] = []
    for t in range(1, horizon + 1):
        for j, count in enumerate(face_counts):
            group = tuple((t, j, i) for i in range(count))
            cells.extend(group)
            rows.append(CardinalityRow(t=t, j=j, cells=group, rhs=count - 1))
    return BinaryLayout(cells=tuple(cells), cardinality_rows=tuple(rows))


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root; roundoff-negative eigenvalues are clamped to zero."""
    sym = 0.5 * (np.asarray(matrix, dtype=float) + np.asarray(matrix, dtype=float).T)
    eigenvalues, vectors = np.linalg.eigh(sym)
    root = vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    return root @ vectors.T


def _quantile_coefficient(epsilon_cell: float) -> float:
    if not 0.0 < epsilon_cell < 0.5:
        raise ValueError(
            f"per-row risk must lie in (0, 0.5), got {epsilon_cell!r}: "
            "the quantile coefficient would be nonpositive"
        )
    return normal_inv_cdf(1.0 - epsilon_cell)


def soc_row_known(
    mean: np.ndarray,
    cov: np.ndarray,
    epsilon_cell: float,
    big_m: float,
    selector: np.ndarray,
    t: int,
    j: int,
    i: int,
) -> SocRow:
    """Psi^-1(1 - eps) ||Sigma^1/2 x~||_2 <= mu^T x~ + M z for known moments."""
    cov = np.asarray(cov, dtype=float)
    check_positive_definite(cov)
    coefficient = _quantile_coefficient(epsilon_cell)
    return SocRow(
        t=t,
        j=j,
        i=i,
        cone_matrix=coefficient * sqrtm_psd(cov),
        mean=np.asarray(mean, dtype=float).copy(),
        big_m=float(big_m),
        norm_weight=0.0,
        selector=np.asarray(selector, dtype=float),
        epsilon=float(epsilon_cell),
    )


def soc_row_robust(
    estimate: GaussianEstimate,
    epsilon_cell: float,
    big_m: float,
    selector: np.ndarray,
    t: int,
    j: int,
    i: int,
) -> SocRow:
    """Psi^-1(1 - eps) ||(Sigma_hat + r2 I)^1/2 x~||_2 + r1 ||x~||_2 <= mu_hat^T x~ + M z."""
    coefficient = _quantile_coefficient(epsilon_cell)
    inflated = estimate.covariance + estimate.r2 * np.eye(estimate.dimension)
    return SocRow(
        t=t,
        j=j,
        i=i,
        cone_matrix=coefficient * sqrtm_psd(inflated),
        mean=estimate.mean.copy(),
        big_m=float(big_m),
        norm_weight=estimate.r1,
        selector=np.asarray(selector, dtype=float),
        epsilon=float(epsilon_cell),
    )


def build_chance_rows(
    face_set: ObstacleFaceSet,
    allocation: RiskAllocation,
    big_m: float,
    robust: bool = True,
) -> list[SocRow]:
    """One row per (t, j, i) cell in lexicographic order.

    Known mode uses the estimated moments as if they were exact.
    """
    rows: list[SocRow] = []
    for key in face_set.keys():
        estimate = face_set[key].estimate
        if robust:
            row = soc_row_robust(estimate, allocation[key], big_m, face_set.position_selector, *key)
        else:
            row = soc_row_known(
                estimate.mean, estimate.covariance, allocation[key], big_m,
                face_set.position_selector, *key,
            )
        rows.append(row)
    return rows


def big_m_bound(
    rows: Sequence[SocRow],
    position_boxes: np.ndarray,
    floor: float = DEFAULT_BIG_M_FLOOR,
    inflation: float = DEFAULT_BIG_M_INFLATION,
) -> float:
    """Big-M from the largest |mu^T x~| + cone terms over the reachable boxes.

    ``position_boxes[t - 1]`` holds (lower, upper) of the constrained position
    at step t. The row terms are convex in x~, so corners attain the maximum.
    """
    boxes = np.asarray(position_boxes, dtype=float)
    if not np.all(np.isfinite(boxes)):
        logger.warning("reachable position box is unbounded; using the Big-M floor %.4g", floor)
        return float(floor)
    largest = 0.0
    for row in rows:
        lower, upper = boxes[row.t - 1]
        spectral = float(np.linalg.norm(row.cone_matrix, 2))
        for corner in itertools.product(*zip(lower, upper)):
            x = row.augmented(np.array(corner))
            norm = float(np.linalg.norm(x))
            value = abs(float(row.mean @ x)) + (spectral + row.norm_weight) * norm
            largest = max(largest, value)
    big_m = max(float(floor), inflation * largest)
    logger.info("Big-M %.6g (row bound %.6g, inflation %.3g, floor %.3g)", big_m, largest, inflation, floor)
    return big_m


def with_big_m(rows: Sequence[SocRow], big_m: float) -> list[SocRow]:
    return [replace(row, big_m=float(big_m)) for row in rows]


def joint_confidence(beta: float, horizon: int, face_counts: Sequence[int]) -> ConfidenceReport:
    """Confidence max(0, 1 - 2 beta k) with k = N * sum_j F_j robustified rows."""
    beta = float(beta)
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie in (0, 0.5), got {beta!r}")
    count = horizon * sum(face_counts)
    if count < 1:
        raise ValueError("at least one chance row is needed for a confidence report")
    spent = 2.0 * beta * count
    vacuous = spent >= 1.0
    if vacuous:
        logger.warning(
            "confidence bound is vacuous: 2 * beta * k = %.4g >= 1 (beta=%g, k=%d)", spent, beta, count
        )
    return ConfidenceReport(
        beta=beta,
        constraint_count=count,
        confidence=max(0.0, 1.0 - spent),
        vacuous=vacuous,
    )


def rows_to_json(rows: Sequence[SocRow]) -> list[dict]:
    return [row.to_dict() for row in rows]
