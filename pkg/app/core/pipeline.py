"""Case-study orchestration: sample, estimate, reformulate, solve and validate."""
from __future__ import annotations
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any
import numpy as np
import pandas as pd
from app.core import adversary, dynamics, misocp, reformulate, validate
from app.io.config_loader import derive_seed
from app.io.csv_loader import load_trajectories
from app.models.config import RunConfig
from app.models.planning import Misocp, PlanningProblem, PlanResult, SolverSettings
from app.models.reports import ViolationReport
from app.models.scenario import AdversaryScenario, AdversaryState, ObstacleFaceSet, TrajectoryBatch

logger = logging.getLogger(__name__)

# case label -> (planner mode, sample count)
STUDY_CASES: dict[str, tuple[str, int]] = {
    "A": ("known", 5000),
    "B": ("robust", 5000),
    "C": ("robust", 500),
}


@dataclass
class PlanOutcome:
    """Everything one planning run produced, kept for writing and validation."""

    scenario: AdversaryScenario
    trajectories: TrajectoryBatch
    face_set: ObstacleFaceSet
    problem: PlanningProblem
    misocp: Misocp
    result: PlanResult
    sampling_seed: int
    origin: np.ndarray

    def interchange(self) -> dict[str, Any]:
        """Program, chance rows and frame origin, in planning-frame coordinates."""
        return {
            **self.misocp.to_dict(),
            "frame_origin": self.origin.tolist(),
            "chance_rows": reformulate.rows_to_json(self.problem.chance_rows),
        }


def frame_origin(config: RunConfig) -> np.ndarray:
    """World position of the planning-frame origin."""
    if config.planner.frame == "adversary":
        return np.array([config.scenario.y1_m, config.scenario.y2_m])
    return np.zeros(2)


def planning_config(config: RunConfig) -> RunConfig:
    """The run with every world position moved so the frame origin sits at (0, 0)."""
    ox, oy = frame_origin(config)
    if ox == 0.0 and oy == 0.0:
        return config
    x1, x2, v1, v2 = config.planner.ego_initial_state
    scenario = replace(config.scenario, y1_m=config.scenario.y1_m - ox, y2_m=config.scenario.y2_m - oy)
    planner = replace(
        config.planner,
        ego_initial_state=(x1 - ox, x2 - oy, v1, v2),
        lane_lower_m=config.planner.lane_lower_m - oy,
        lane_upper_m=config.planner.lane_upper_m - oy,
    )
    return replace(config, scenario=scenario, planner=planner)


def _shift_batch(batch: TrajectoryBatch, origin: np.ndarray) -> TrajectoryBatch:
    return TrajectoryBatch(y1=batch.y1 - origin[0], y2=batch.y2 - origin[1], theta=batch.theta)


def _to_world(result: PlanResult, origin: np.ndarray) -> PlanResult:
    offset = np.zeros(result.x0.size)
    offset[:2] = origin
    states = result.states + offset if result.states.size else result.states
    return replace(result, x0=result.x0 + offset, states=states)


def build_scenario(config: RunConfig, seed: int | None = None) -> AdversaryScenario:
    block = config.scenario
    return AdversaryScenario(
        initial_state=AdversaryState(block.y1_m, block.y2_m, block.theta_rad),
        speed_mps=block.speed_mps,
        horizon=config.planner.horizon,
        sampling_time_s=config.planner.sampling_time_s,
        length_m=block.length_m,
        width_m=block.width_m,
        turn_spread_rad=block.turn_spread_rad,
        turn_cap_rad=block.turn_cap_rad,
        seed=derive_seed(config.seed, "sampling") if seed is None else seed,
    )


def adversary_trajectories(
    config: RunConfig, scenario: AdversaryScenario, origin: np.ndarray | None = None
) -> TrajectoryBatch:
    """Recorded trajectories when the config names a CSV, sampled ones otherwise.

    Recorded positions are in world coordinates and are moved by ``origin``.
    """
    planner = config.planner
    if planner.trajectories_csv:
        batch = load_trajectories(planner.trajectories_csv, scenario.horizon)
        if origin is not None:
            batch = _shift_batch(batch, origin)
        logger.info("loaded %d recorded trajectories from %s", batch.sample_count, planner.trajectories_csv)
        return batch
    logger.info("sampling %d adversary trajectories (seed %d)", planner.samples, scenario.seed)
    return adversary.sample_trajectories(scenario, planner.samples)


def estimate_faces(
    config: RunConfig, scenario: AdversaryScenario, trajectories: TrajectoryBatch
) -> ObstacleFaceSet:
    planner = config.planner
    faces = adversary.inflated_faces(
        trajectories, scenario, planner.ego_length_m, planner.ego_width_m,
        planner.inflation, planner.face_convention,
    )
    return adversary.build_obstacle_faces(
        adversary.face_sample_grid(faces),
        scenario.horizon,
        planner.beta,
        diagonal_mode=planner.covariance_mode == "diagonal",
        ridge=planner.covariance_ridge,
        position_selector=adversary.CASE_STUDY_SELECTOR,
    )


def base_problem(config: RunConfig) -> PlanningProblem:
    """Double-integrator ego car without chance rows, cost -x_{1,N}."""
    planner = config.planner
    horizon = planner.horizon
    a, b = dynamics.discretize_double_integrator(planner.sampling_time_s)
    velocity_rows, velocity_rhs = dynamics.velocity_polytope(planner.forward_speed_mps, planner.lateral_speed_mps)
    lane, lane_rhs = dynamics.lane_rows(planner.lane_lower_m, planner.lane_upper_m)
    state_rows = (np.vstack([velocity_rows, lane]), np.concatenate([velocity_rhs, lane_rhs]))
    cost_state = np.zeros((horizon, 4))
    cost_state[-1, 0] = -1.0
    return PlanningProblem(
        horizon=horizon,
        A=[a] * horizon,
        B=[b] * horizon,
        x0=np.array(planner.ego_initial_state),
        input_rows=dynamics.input_box_rows(np.array(planner.input_lower), np.array(planner.input_upper)),
        state_rows=[state_rows] * horizon,
        cost_state=cost_state,
        cost_input=np.zeros((horizon, 2)),
        epsilon=planner.epsilon,
        beta=planner.beta,
    )


def build_planning_problem(config: RunConfig, face_set: ObstacleFaceSet) -> PlanningProblem:
    """Attach the chance rows of the configured mode and size Big-M on the reachable set."""
    planner = config.planner
    problem = base_problem(config)
    robust = planner.mode == "robust"
    allocation = reformulate.get_allocator(planner.risk_allocation)(
        planner.epsilon, face_set.horizon, face_set.face_counts
    )
    rows = reformulate.build_chance_rows(face_set, allocation, planner.big_m.floor, robust=robust)
    if planner.big_m.value is not None:
        big_m = planner.big_m.value
    else:
        boxes = dynamics.position_bounds(problem, face_set.position_selector)
        big_m = reformulate.big_m_bound(rows, boxes, planner.big_m.floor, planner.big_m.inflation)
    problem.chance_rows = reformulate.with_big_m(rows, big_m)
    problem.face_counts = face_set.face_counts
    problem.big_m = big_m
    if robust:
        problem.confidence = reformulate.joint_confidence(planner.beta, face_set.horizon, face_set.face_counts)
    return problem


def solver_settings(config: RunConfig) -> SolverSettings:
    return SolverSettings(
        gap_tol=config.solver.gap_tol,
        integrality_tol=config.solver.integrality_tol,
        node_limit=config.solver.node_limit,
        backend=config.solver.backend,
    )


def plan_case_study(config: RunConfig, sampling_seed: int | None = None) -> PlanOutcome:
    """Sample, estimate, reformulate and solve in the planning frame.

    The returned result is in world coordinates; the scenario, faces,
    problem and program stay in the planning frame.
    """
    origin = frame_origin(config)
    local = planning_config(config)
    scenario = build_scenario(local, sampling_seed)
    trajectories = adversary_trajectories(local, scenario, origin)
    face_set = estimate_faces(local, scenario, trajectories)
    problem = build_planning_problem(local, face_set)
    program = misocp.assemble(problem)
    result = misocp.solve(program, solver_settings(config), problem.confidence)
    logger.info("planned in the %s frame, origin (%.3f, %.3f) m", config.planner.frame, *origin)
    return PlanOutcome(
        scenario=scenario,
        trajectories=trajectories,
        face_set=face_set,
        problem=problem,
        misocp=program,
        result=_to_world(result, origin),
        sampling_seed=scenario.seed,
        origin=origin,
    )


def validate_plan(
    config: RunConfig, result: PlanResult, seed: int, realizations: int | None = None
) -> ViolationReport:
    planner = config.planner
    scenario = build_scenario(config, seed)
    return validate.empirical_violation(
        result.states[:, :2],
        scenario,
        realizations or config.validation.realizations,
        seed,
        planner.ego_length_m,
        planner.ego_width_m,
        planner.inflation,
        planner.face_convention,
    )


def case_config(config: RunConfig, case: str) -> RunConfig:
    mode, samples = STUDY_CASES[case]
    return replace(config, planner=replace(config.planner, mode=mode, samples=samples))


def _study_repetition(config: RunConfig, repetition: int) -> list[dict[str, Any]]:
    stream = derive_seed(config.seed, f"study/{repetition}")
    sampling_seed = derive_seed(stream, "sampling")
    validation_seed = derive_seed(stream, "validation")
    records = []
    for case in STUDY_CASES:
        outcome = plan_case_study(case_config(config, case), sampling_seed)
        result = outcome.result
        record: dict[str, Any] = {
            "repetition": repetition,
            "case": case,
            "mode": STUDY_CASES[case][0],
            "samples": STUDY_CASES[case][1],
            "status": result.status,
            "terminal_x1_m": float("nan"),
            "cost": float("nan"),
            "violation_probability": float("nan"),
            "solve_time_s": result.wall_time_s,
            "node_count": result.node_count,
            "sampling_seed": sampling_seed,
            "validation_seed": validation_seed,
        }
        if result.status in ("optimal", "budget-exhausted") and result.states.size:
            report = validate_plan(config, result, validation_seed)
            record.update(
                terminal_x1_m=float(result.states[-1, 0]),
                cost=result.objective,
                violation_probability=report.probability,
            )
        records.append(record)
    return records


def run_study(config: RunConfig, repetitions: int | None = None, workers: int = 1) -> pd.DataFrame:
    """Cases A, B and C over matched seeds, one row per (repetition, case)."""
    count = repetitions or config.validation.repetitions
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_study_repetition, [config] * count, range(count)))
    else:
        batches = [_study_repetition(config, k) for k in range(count)]
    frame = pd.DataFrame([record for batch in batches for record in batch])
    medians = frame.groupby("case")["terminal_x1_m"].median()
    logger.info("median terminal x1 by case: %s", ", ".join(f"{k}={v:.3f}" for k, v in medians.items()))
    return frame
