"""Sampled adversary vehicle: turn rates, unicycle propagation and face coefficients."""
from __future__ import annotations
import logging
import math
import numpy as np
from app.core import moments
from app.models.estimates import Probability, SampleSet
from app.models.scenario import (
    AdversaryScenario,
    AdversaryState,
    ObstacleFaceSet,
    TrajectoryBatch,
    UncertainFace,
)

logger = logging.getLogger(__name__)

FACE_COUNT = 4
FACE_CONVENTIONS = ("printed", "heading_aligned")
INFLATION_MODES = ("axis", "diagonal")
CASE_STUDY_SELECTOR = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def turn_rates_from_uniforms(scenario: AdversaryScenario, uniforms: np.ndarray) -> np.ndarray:
    """Map unit uniforms (..., N) to turn rates under the clipped turn budget.

    A draw whose clipped upper endpoint falls below the lower endpoint takes
    the clipped upper endpoint.
    """
    uniforms = np.asarray(uniforms, dtype=float)
    lower, upper = scenario.turn_rate_bounds
    omegas = np.empty_like(uniforms)
    turned = np.zeros(uniforms.shape[:-1])
    for t in range(uniforms.shape[-1]):
        clipped = np.minimum(upper, scenario.turn_cap_rad - turned)
        draw = lower + uniforms[..., t] * (clipped - lower)
        omegas[..., t] = np.where(clipped >= lower, draw, clipped)
        turned = turned + omegas[..., t]
    return omegas


def sample_turn_rates(scenario: AdversaryScenario, rng: np.random.Generator) -> np.ndarray:
    """Turn rates omega_0..omega_{N-1} in rad per step."""
    if scenario.horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {scenario.horizon}")
    return turn_rates_from_uniforms(scenario, rng.random(scenario.horizon))


def propagate_batch(scenario: AdversaryScenario, omegas: np.ndarray) -> TrajectoryBatch:
    """Forward-Euler unicycle states at t = 1..N for each row of turn rates."""
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    if omegas.shape[1] != scenario.horizon:
        raise ValueError(
            f"expected {scenario.horizon} turn rates per trajectory, got {omegas.shape[1]}"
        )
    step = scenario.sampling_time_s * scenario.speed_mps
    start = scenario.initial_state
    # heading before each step: theta_0, theta_0 + omega_0, ...
    headings = start.theta + np.concatenate(
        [np.zeros((omegas.shape[0], 1)), np.cumsum(omegas, axis=1)[:, :-1]], axis=1
    )
    y1 = start.y1 + step * np.cumsum(np.cos(headings), axis=1)
    y2 = start.y2 + step * np.cumsum(np.sin(headings), axis=1)
    theta = start.theta + np.cumsum(omegas, axis=1)
    return TrajectoryBatch(y1=y1, y2=y2, theta=theta)


def propagate_adversary(scenario: AdversaryScenario, omegas: np.ndarray) -> list[AdversaryState]:
    """States at t = 1..N for one turn-rate sequence."""
    batch = propagate_batch(scenario, np.asarray(omegas, dtype=float).reshape(1, -1))
    return [
        AdversaryState(float(batch.y1[0, t]), float(batch.y2[0, t]), float(batch.theta[0, t]))
        for t in range(scenario.horizon)
    ]


def face_coefficients_batch(
    y1: np.ndarray,
    y2: np.ndarray,
    theta: np.ndarray,
    length_m: float,
    width_m: float,
    convention: str = "printed",
) -> np.ndarray:
    """Face vectors d_1..d_4, shape (..., 4, 3); d^T [p1, p2, 1] > 0 outside that face."""
    if convention not in FACE_CONVENTIONS:
        raise ValueError(f"unknown face convention {convention!r}, expected one of {FACE_CONVENTIONS}")
    y1, y2, theta = np.broadcast_arrays(
        np.asarray(y1, dtype=float), np.asarray(y2, dtype=float), np.asarray(theta, dtype=float)
    )
    c = np.cos(theta)
    s = np.sin(theta) if convention == "printed" else -np.sin(theta)
    half_l = 0.5 * length_m
    half_w = 0.5 * width_m
    d = np.empty(theta.shape + (FACE_COUNT, 3))
    d[..., 0, :] = np.stack([c, -s, -c * y1 + s * y2 - half_l], axis=-1)
    d[..., 1, :] = np.stack([s, c, -s * y1 - c * y2 - half_w], axis=-1)
    d[..., 2, :] = np.stack([-c, s, c * y1 - s * y2 - half_l], axis=-1)
    d[..., 3, :] = np.stack([-s, -c, s * y1 + c * y2 - half_w], axis=-1)
    return d


def face_coefficients(
    state: AdversaryState, length_m: float, width_m: float, convention: str = "printed"
) -> np.ndarray:
    """The four face vectors of the adversary box at one pose, shape (4, 3)."""
    return face_coefficients_batch(
        np.float64(state.y1), np.float64(state.y2), np.float64(state.theta),
        length_m, width_m, convention,
    )


def inflate_for_ego(
    d: np.ndarray, ego_length_m: float, ego_width_m: float, mode: str = "axis"
) -> np.ndarray:
    """Shrink the safe side of each face by the ego footprint.

    ``axis`` subtracts the ego half-length from faces 1 and 3 and the ego
    half-width from faces 2 and 4; ``diagonal`` subtracts the ego half-diagonal
    from all four.
    """
    if mode not in INFLATION_MODES:
        raise ValueError(f"unknown inflation mode {mode!r}, expected one of {INFLATION_MODES}")
    d = np.array(d, dtype=float, copy=True)
    if mode == "axis":
        shifts = np.array([ego_length_m, ego_width_m, ego_length_m, ego_width_m]) / 2.0
    else:
        shifts = np.full(FACE_COUNT, math.hypot(ego_length_m, ego_width_m) / 2.0)
    d[..., :, 2] -= shifts
    return d


def sample_trajectories(
    scenario: AdversaryScenario, n_samples: int, base_seed: int | None = None
) -> TrajectoryBatch:
    """Sample n_samples adversary trajectories.

    Sample k draws from its own generator seeded with base_seed + k, so the
    batch does not depend on how it is split or ordered.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    base = scenario.seed if base_seed is None else base_seed
    uniforms = np.stack(
        [np.random.default_rng(base + k).random(scenario.horizon) for k in range(n_samples)]
    )
    return propagate_batch(scenario, turn_rates_from_uniforms(scenario, uniforms))


def inflated_faces(
    trajectories: TrajectoryBatch,
    scenario: AdversaryScenario,
    ego_length_m: float,
    ego_width_m: float,
    inflation: str = "axis",
    convention: str = "printed",
) -> np.ndarray:
    """Inflated face vectors for every sample and step, shape (S, N, 4, 3)."""
    d = face_coefficients_batch(
        trajectories.y1, trajectories.y2, trajectories.theta,
        scenario.length_m, scenario.width_m, convention,
    )
    return inflate_for_ego(d, ego_length_m, ego_width_m, inflation)


def face_sample_grid(faces: np.ndarray) -> dict[tuple[int, int], SampleSet]:
    """Split (S, N, 4, 3) face vectors into per-(t, i) sample sets, t 1-based."""
    _, horizon, count, _ = faces.shape
    return {
        (t + 1, i): SampleSet(faces[:, t, i, :])
        for t in range(horizon)
        for i in range(count)
    }


def build_face_samples(
    scenario: AdversaryScenario,
    n_samples: int,
    ego_length_m: float,
    ego_width_m: float,
    inflation: str = "axis",
    convention: str = "printed",
    base_seed: int | None = None,
) -> dict[tuple[int, int], SampleSet]:
    """Per-(t, face) sample sets of inflated face coefficients from sampled trajectories."""
    if n_samples < 2:
        raise ValueError(f"n_samples must be at least 2, got {n_samples}")
    trajectories = sample_trajectories(scenario, n_samples, base_seed)
    logger.info(
        "sampled %d adversary trajectories over %d steps (seed %s)",
        n_samples, scenario.horizon, scenario.seed if base_seed is None else base_seed,
    )
    return face_sample_grid(
        inflated_faces(trajectories, scenario, ego_length_m, ego_width_m, inflation, convention)
    )


def build_obstacle_faces(
    grid: dict[tuple[int, int], SampleSet],
    horizon: int,
    beta: Probability | float,
    diagonal_mode: bool = False,
    ridge: float = 0.0,
    position_selector: np.ndarray = CASE_STUDY_SELECTOR,
) -> ObstacleFaceSet:
    """Estimate every face of a single obstacle and collect them into a face set."""
    face_count = 1 + max(i for _, i in grid)
    faces: dict[tuple[int, int, int], UncertainFace] = {}
    for (t, i), samples in sorted(grid.items()):
        estimate = moments.build_estimate(samples, beta, diagonal_mode, ridge)
        faces[(t, 0, i)] = UncertainFace(t=t, j=0, i=i, estimate=estimate)
    radii = np.array([[f.estimate.r1, f.estimate.r2] for f in faces.values()])
    logger.info(
        "estimated %d faces: r1 in [%.4g, %.4g], r2 in [%.4g, %.4g]",
        len(faces), radii[:, 0].min(), radii[:, 0].max(), radii[:, 1].min(), radii[:, 1].max(),
    )
    return ObstacleFaceSet(
        horizon=horizon,
        face_counts=(face_count,),
        faces=faces,
        position_selector=position_selector,
    )
