"""Assembly of the planning MISOCP and its branch-and-bound solver."""
from __future__ import annotations
import heapq
import itertools
import logging
import time
import numpy as np
from app.core.backend import ConicBackend, RelaxationResult
from app.core.errors import SolverError
from app.core.reformulate import big_m_rows
from app.models.planning import (
    Cell,
    ConeBlock,
    ConfidenceReport,
    Misocp,
    PlanningProblem,
    PlanResult,
    SolverSettings,
)

logger = logging.getLogger(__name__)

# Published row total of the case study, logged next to the itemized counts.
REFERENCE_ROW_TOTAL = 224


def _binary_cells(problem: PlanningProblem) -> tuple[list[Cell], list[tuple[tuple[Cell, ...], int]]]:
    if not problem.chance_rows:
        return [], []
    layout = big_m_rows(problem.face_counts, problem.horizon)
    present = {(row.t, row.j, row.i) for row in problem.chance_rows}
    if present != set(layout.cells):
        raise ValueError("chance rows do not cover exactly one row per (t, j, i) face")
    groups = [(row.cells, row.rhs) for row in layout.cardinality_rows]
    return list(layout.cells), groups


def assemble(problem: PlanningProblem) -> Misocp:
    """Lay the planning problem out over w = [x_1..x_N, u_0..u_{N-1}, z, s].

    States stay decision variables tied together by dynamics equality rows.
    Binaries follow (t, j, i) order; one auxiliary s >= ||x~|| is added per
    row that carries a mean radius.
    """
    n_x, n_u, horizon = problem.state_dim, problem.input_dim, problem.horizon
    state_cols = np.arange(horizon * n_x).reshape(horizon, n_x)
    input_cols = horizon * n_x + np.arange(horizon * n_u).reshape(horizon, n_u)
    names = [f"x{k + 1}_{t + 1}" for t in range(horizon) for k in range(n_x)]
    names += [f"u{k + 1}_{t}" for t in range(horizon) for k in range(n_u)]

    cells, groups = _binary_cells(problem)
    next_col = horizon * (n_x + n_u)
    binary_cols: dict[Cell, int] = {}
    for cell in cells:
        binary_cols[cell] = next_col
        names.append("z_{}_{}_{}".format(*cell))
        next_col += 1
    aux_cols: dict[Cell, int] = {}
    for row in problem.chance_rows:
        if row.norm_weight > 0.0:
            aux_cols[(row.t, row.j, row.i)] = next_col
            names.append("s_{}_{}_{}".format(row.t, row.j, row.i))
            next_col += 1
    n_cols = next_col

    objective = np.zeros(n_cols)
    objective[state_cols.ravel()] = problem.cost_state.ravel()
    objective[input_cols.ravel()] = problem.cost_input.ravel()

    # x_{t+1} - A_t x_t - B_t u_t = 0, with x_0 moved to the right-hand side
    a_eq = np.zeros((horizon * n_x, n_cols))
    b_eq = np.zeros(horizon * n_x)
    for t in range(horizon):
        block = slice(t * n_x, (t + 1) * n_x)
        a_eq[block, state_cols[t]] = np.eye(n_x)
        a_eq[block, input_cols[t]] = -problem.B[t]
        if t == 0:
            b_eq[block] = problem.A[0] @ problem.x0
        else:
            a_eq[block, state_cols[t - 1]] = -problem.A[t]

    h_u, g_u = problem.input_rows
    ub_rows: list[np.ndarray] = []
    ub_rhs: list[np.ndarray] = []
    for t in range(horizon):
        rows = np.zeros((h_u.shape[0], n_cols))
        rows[:, input_cols[t]] = h_u
        ub_rows.append(rows)
        ub_rhs.append(g_u)
    for t, (h_x, g_x) in enumerate(problem.state_rows):
        rows = np.zeros((h_x.shape[0], n_cols))
        rows[:, state_cols[t]] = h_x
        ub_rows.append(rows)
        ub_rhs.append(g_x)
    a_ub = np.vstack(ub_rows) if ub_rows else np.zeros((0, n_cols))
    b_ub = np.concatenate(ub_rhs) if ub_rhs else np.zeros(0)

    a_card = np.zeros((len(groups), n_cols))
    b_card = np.zeros(len(groups))
    for r, (group, rhs) in enumerate(groups):
        a_card[r, [binary_cols[cell] for cell in group]] = 1.0
        b_card[r] = rhs

    cones: list[ConeBlock] = []
    for row in problem.chance_rows:
        cell = (row.t, row.j, row.i)
        selector = row.selector
        n_p = selector.shape[0]
        cols = state_cols[row.t - 1]
        dim = n_p + 1
        # x~ = L w + e with L picking S x_t and e the trailing one
        lift = np.zeros((dim, n_cols))
        lift[:n_p, cols] = selector
        unit = np.zeros(dim)
        unit[-1] = 1.0
        c = row.mean @ lift
        c[binary_cols[cell]] += row.big_m
        d = float(row.mean[-1])
        if row.norm_weight > 0.0:
            c[aux_cols[cell]] -= row.norm_weight
        cones.append(
            ConeBlock(G=row.cone_matrix @ lift, g=row.cone_matrix @ unit, c=c, d=d, kind="face", cell=cell)
        )
        if row.norm_weight > 0.0:
            c_aux = np.zeros(n_cols)
            c_aux[aux_cols[cell]] = 1.0
            cones.append(ConeBlock(G=lift, g=unit, c=c_aux, d=0.0, kind="aux_norm", cell=cell))

    lower = np.full(n_cols, -np.inf)
    upper = np.full(n_cols, np.inf)
    for col in aux_cols.values():
        lower[col] = 0.0

    misocp = Misocp(
        n_cols=n_cols,
        objective=objective,
        column_names=names,
        binary_cols=binary_cols,
        state_cols=state_cols,
        input_cols=input_cols,
        aux_cols=aux_cols,
        A_eq=a_eq,
        b_eq=b_eq,
        A_ub=a_ub,
        b_ub=b_ub,
        A_card=a_card,
        b_card=b_card,
        cones=cones,
        lower=lower,
        upper=upper,
        x0=problem.x0.copy(),
    )
    counts = misocp.counts()
    row_total = (
        counts["equality_rows"] + counts["inequality_rows"] + counts["cardinality_rows"]
        + counts["face_cones"] + counts["auxiliary_cones"]
    )
    logger.info(
        "assembled MISOCP: %d state/input + %d binary + %d auxiliary columns; "
        "%d dynamics, %d polytope, %d cardinality rows, %d face and %d auxiliary cones "
        "(%d rows against a reference total of %d)",
        counts["state_input_columns"], counts["binary_columns"], counts["auxiliary_columns"],
        counts["equality_rows"], counts["inequality_rows"], counts["cardinality_rows"],
        counts["face_cones"], counts["auxiliary_cones"], row_total, REFERENCE_ROW_TOTAL,
    )
    return misocp


def max_violation(m: Misocp, w: np.ndarray) -> float:
    """Largest violation of any row, bound or integrality condition at w."""
    w = np.asarray(w, dtype=float)
    worst = [0.0]
    if m.A_eq.shape[0]:
        worst.append(float(np.max(np.abs(m.A_eq @ w - m.b_eq))))
    for rows, rhs in ((m.A_ub, m.b_ub), (m.A_card, m.b_card)):
        if rows.shape[0]:
            worst.append(float(np.max(rows @ w - rhs)))
    worst.extend(cone.residual(w) for cone in m.cones)
    with np.errstate(invalid="ignore"):
        worst.append(float(np.max(np.where(np.isfinite(m.lower), m.lower - w, 0.0), initial=0.0)))
        worst.append(float(np.max(np.where(np.isfinite(m.upper), w - m.upper, 0.0), initial=0.0)))
    if m.binary_cols:
        values = w[m.binary_indices]
        worst.append(float(np.max(np.abs(values - np.round(values)))))
    return max(worst)


def _fractionality(values: np.ndarray) -> np.ndarray:
    return np.minimum(values - np.floor(values), np.ceil(values) - values)


def _result(
    m: Misocp,
    status: str,
    w: np.ndarray | None,
    objective: float,
    node_count: int,
    started: float,
    root_bound: float,
    confidence: ConfidenceReport | None,
) -> PlanResult:
    horizon, n_x = m.state_cols.shape
    n_u = m.input_cols.shape[1]
    x0 = np.zeros(n_x) if m.x0 is None else np.asarray(m.x0, dtype=float)
    wall = time.perf_counter() - started
    if w is None:
        return PlanResult(
            status=status,
            objective=float("nan"),
            inputs=np.zeros((0, n_u)),
            states=np.zeros((0, n_x)),
            binaries={},
            node_count=node_count,
            wall_time_s=wall,
            root_bound=root_bound,
            x0=x0,
            confidence=confidence,
        )
    binaries = {cell: int(round(w[col])) for cell, col in m.binary_cols.items()}
    violation = max_violation(m, w)
    logger.info(
        "status %s, objective %.6g, %d nodes, %.3f s, max row violation %.3g",
        status, objective, node_count, wall, violation,
    )
    return PlanResult(
        status=status,
        objective=float(objective),
        inputs=w[m.input_cols],
        states=w[m.state_cols],
        binaries=binaries,
        node_count=node_count,
        wall_time_s=wall,
        root_bound=root_bound,
        x0=x0,
        solution=w,
        confidence=confidence,
        max_row_violation=violation,
    )


def _polish(
    backend: ConicBackend, relaxation: RelaxationResult, node: int
) -> RelaxationResult:
    """Re-solve with the binaries fixed at their rounded values."""
    fixed = np.round(relaxation.x[backend.binary_idx])
    polished = backend.solve(fixed, fixed, node)
    if polished.status != "optimal":
        logger.debug("polishing node %d failed with status %s; keeping the relaxed point", node, polished.status)
        return relaxation
    return polished


def solve(
    m: Misocp,
    settings: SolverSettings | None = None,
    confidence: ConfidenceReport | None = None,
) -> PlanResult:
    """Best-first branch and bound over continuous SOC relaxations.

    Branches on the most fractional binary (lowest column on ties) and prunes
    nodes whose bound is within ``gap_tol`` of the incumbent. Running out of
    nodes returns the incumbent with status ``budget-exhausted``.
    """
    settings = settings or SolverSettings()
    started = time.perf_counter()
    backend = ConicBackend(m, settings.backend)
    binary_idx = backend.binary_idx
    root_lower = m.lower[binary_idx].copy()
    root_upper = m.upper[binary_idx].copy()

    root = backend.solve(root_lower, root_upper, node=0)
    node_count = 1
    if root.status == "infeasible":
        logger.info("root relaxation is infeasible")
        return _result(m, "infeasible", None, float("nan"), node_count, started, float("inf"), confidence)
    if root.status == "unbounded":
        raise SolverError("root relaxation is unbounded; the input set must be bounded", 0)
    root_bound = root.objective

    incumbent: RelaxationResult | None = None
    counter = itertools.count()
    heap: list[tuple[float, int, np.ndarray, np.ndarray, RelaxationResult]] = []
    heapq.heappush(heap, (root.objective, next(counter), root_lower, root_upper, root))
    node_id = 0
    while heap:
        bound, node_id, lower, upper, relaxation = heapq.heappop(heap)
        if incumbent is not None and bound >= incumbent.objective - settings.gap_tol:
            continue
        values = relaxation.x[binary_idx]
        fractional = _fractionality(values)
        if fractional.size == 0 or fractional.max() <= settings.integrality_tol:
            candidate = _polish(backend, relaxation, node_id) if settings.polish and fractional.size else relaxation
            if incumbent is None or candidate.objective < incumbent.objective:
                incumbent = candidate
                logger.debug("node %d: new incumbent %.9g", node_id, candidate.objective)
            continue
        if node_count >= settings.node_limit:
            heapq.heappush(heap, (bound, node_id, lower, upper, relaxation))
            break
        pick = int(np.argmax(fractional))
        logger.debug("node %d: bound %.9g, branching on %s", node_id, bound, m.column_names[binary_idx[pick]])
        for value in (0.0, 1.0):
            child_lower = lower.copy()
            child_upper = upper.copy()
            child_lower[pick] = value
            child_upper[pick] = value
            child_id = next(counter)
            child = backend.solve(child_lower, child_upper, node=child_id)
            node_count += 1
            if child.status == "unbounded":
                raise SolverError("relaxation is unbounded; the input set must be bounded", child_id)
            if child.status != "optimal":
                continue
            if incumbent is not None and child.objective >= incumbent.objective - settings.gap_tol:
                continue
            heapq.heappush(heap, (child.objective, child_id, child_lower, child_upper, child))

    open_nodes = [entry for entry in heap if incumbent is None or entry[0] < incumbent.objective - settings.gap_tol]
    if open_nodes:
        logger.warning("node budget of %d exhausted with %d open nodes", settings.node_limit, len(open_nodes))
        if incumbent is None:
            return _result(m, "budget-exhausted", None, float("nan"), node_count, started, root_bound, confidence)
        return _result(
            m, "budget-exhausted", incumbent.x, incumbent.objective, node_count, started, root_bound, confidence
        )
    if incumbent is None:
        return _result(m, "infeasible", None, float("nan"), node_count, started, root_bound, confidence)
    return _result(m, "optimal", incumbent.x, incumbent.objective, node_count, started, root_bound, confidence)


def _cardinality_feasible(m: Misocp, assignment: np.ndarray) -> bool:
    if not m.A_card.shape[0]:
        return True
    return bool(np.all(m.A_card[:, m.binary_indices] @ assignment <= m.b_card + 1e-9))


def solve_by_enumeration(m: Misocp, settings: SolverSettings | None = None) -> PlanResult:
    """Solve one SOCP per binary assignment and keep the best; for small instances only."""
    settings = settings or SolverSettings()
    started = time.perf_counter()
    backend = ConicBackend(m, settings.backend)
    count = backend.binary_idx.size
    if count > 20:
        raise ValueError(f"enumeration over {count} binaries is not supported")
    lower = m.lower[backend.binary_idx]
    upper = m.upper[backend.binary_idx]
    best: RelaxationResult | None = None
    solved = 0
    for bits in itertools.product((0.0, 1.0), repeat=count):
        assignment = np.array(bits)
        if np.any(assignment < lower) or np.any(assignment > upper):
            continue
        if not _cardinality_feasible(m, assignment):
            continue
        result = backend.solve(assignment, assignment, node=solved)
        solved += 1
        if result.status == "unbounded":
            raise SolverError("relaxation is unbounded; the input set must be bounded", solved - 1)
        if result.status == "optimal" and (best is None or result.objective < best.objective):
            best = result
    if best is None:
        return _result(m, "infeasible", None, float("nan"), solved, started, float("nan"), None)
    return _result(m, "optimal", best.x, best.objective, solved, started, float("nan"), None)
