from __future__ import annotations
import numpy as np
from scipy.optimize import linprog
from app.models.planning import PlanningProblem
from app.models.scenario import KMH_TO_MPS


def discretize_double_integrator(sampling_time_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold planar double integrator, state (x1, x2, x3, x4), input (u1, u2)."""
    if not sampling_time_s > 0.0:
        raise ValueError(f"sampling time must be positive, got {sampling_time_s!r}")
    ts = float(sampling_time_s)
    a = np.eye(4)
    a[0, 2] = ts
    a[1, 3] = ts
    b = np.array(
        [
            [0.5 * ts**2, 0.0],
            [0.0, 0.5 * ts**2],
            [ts, 0.0],
            [0.0, ts],
        ]
    )
    return a, b


def velocity_polytope(
    forward_mps: float = 40.0 * KMH_TO_MPS,
    lateral_mps: float = 20.0 * KMH_TO_MPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Diamond |x3 / v1 - 1| + |x4 / v2 - 1| <= 1 as four rows H x <= h over the state."""
    rows = []
    rhs = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            rows.append([0.0, 0.0, s1 / forward_mps, s2 / lateral_mps])
            rhs.append(1.0 + s1 + s2)
    return np.array(rows), np.array(rhs)


def lane_rows(lower_m: float, upper_m: float) -> tuple[np.ndarray, np.ndarray]:
    if upper_m < lower_m:
        raise ValueError(f"lane bounds are inverted: [{lower_m}, {upper_m}]")
    return np.array([[0.0, 1.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]]), np.array([upper_m, -lower_m])


def input_box_rows(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    eye = np.eye(lower.size)
    return np.vstack([eye, -eye]), np.concatenate([upper, -lower])


def polytope_box(rows: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of {v : rows v <= rhs}; unbounded directions give +-inf."""
    n = rows.shape[1]
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    if rows.shape[0] == 0:
        return lower, upper
    for k in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[k] = sign
            res = linprog(cost, A_ub=rows, b_ub=rhs, bounds=[(None, None)] * n, method="highs")
            if res.status == 0:
                if sign > 0:
                    lower[k] = res.fun
                else:
                    upper[k] = -res.fun
            elif res.status == 2:
                raise ValueError("polytope is empty")
    return lower, upper


def _interval_product(matrix: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos = np.clip(matrix, 0.0, None)
    neg = np.clip(matrix, None, 0.0)
    with np.errstate(invalid="ignore"):
        lo = pos @ np.nan_to_num(lower, neginf=-1e300) + neg @ np.nan_to_num(upper, posinf=1e300)
        hi = pos @ np.nan_to_num(upper, posinf=1e300) + neg @ np.nan_to_num(lower, neginf=-1e300)
    lo[lo <= -1e299] = -np.inf
    hi[hi >= 1e299] = np.inf
    return lo, hi


def position_bounds(problem: PlanningProblem, selector: np.ndarray) -> np.ndarray:
    """Box hull of reachable constrained positions, shape (N, 2, n_p).

    Intervals are propagated through the dynamics with the input bounding box
    and clipped at each step by the bounding box of the state polytope.
    """
    u_lower, u_upper = polytope_box(*problem.input_rows)
    lower = problem.x0.copy()
    upper = problem.x0.copy()
    boxes = []
    for t in range(problem.horizon):
        ax_lo, ax_hi = _interval_product(problem.A[t], lower, upper)
        bu_lo, bu_hi = _interval_product(problem.B[t], u_lower, u_upper)
        lower, upper = ax_lo + bu_lo, ax_hi + bu_hi
        s_lower, s_upper = polytope_box(*problem.state_rows[t])
        lower = np.maximum(lower, s_lower)
        upper = np.minimum(upper, s_upper)
        upper = np.maximum(upper, lower)
        boxes.append(_interval_product(np.asarray(selector, dtype=float), lower, upper))
    return np.array(boxes)


def rollout(problem: PlanningProblem, inputs: np.ndarray) -> np.ndarray:
    """States x_1..x_N reached from x0 under inputs u_0..u_{N-1}."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape != (problem.horizon, problem.input_dim):
        raise ValueError(f"inputs must have shape {(problem.horizon, problem.input_dim)}, got {inputs.shape}")
    state = problem.x0
    states = []
    for t in range(problem.horizon):
        state = problem.A[t] @ state + problem.B[t] @ inputs[t]
        states.append(state)
    return np.array(states)
