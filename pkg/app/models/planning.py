from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Any
import numpy as np

Cell = tuple[int, int, int]


@dataclass(frozen=True)
class RiskAllocation:
    """Per-constraint risks eps^t_ij whose sum stays within the total budget."""

    total: float
    cells: dict[Cell, float]

    def __post_init__(self) -> None:
        if not 0.0 < self.total < 0.5:
            raise ValueError(f"total risk must lie in (0, 0.5), got {self.total!r}")
        for key, value in self.cells.items():
            if not 0.0 < value < 0.5:
                raise ValueError(f"risk of cell {key} must lie in (0, 0.5), got {value!r}")
        spent = math.fsum(self.cells.values())
        if spent > self.total + 1e-15:
            raise ValueError(f"allocated risk {spent!r} exceeds the budget {self.total!r}")

    def __getitem__(self, key: Cell) -> float:
        return self.cells[key]


@dataclass(frozen=True)
class CardinalityRow:
    """sum_i z^t_ij <= F_j - 1 over the binaries of one (t, j) disjunction."""

    t: int
    j: int
    cells: tuple[Cell, ...]
    rhs: int


@dataclass(frozen=True)
class BinaryLayout:
    cells: tuple[Cell, ...]
    cardinality_rows: tuple[CardinalityRow, ...]


@dataclass(frozen=True)
class SocRow:
    """One chance row over x~ = [S x_t; 1]:

        ||cone_matrix x~||_2 + norm_weight * ||x~||_2 <= mean^T x~ + big_m * z

    ``norm_weight`` is r1 for robust rows and 0 for known-moment rows.
    """

    t: int
    j: int
    i: int
    cone_matrix: np.ndarray
    mean: np.ndarray
    big_m: float
    norm_weight: float
    selector: np.ndarray
    epsilon: float

    def augmented(self, position: np.ndarray) -> np.ndarray:
        return np.append(np.asarray(position, dtype=float), 1.0)

    def margin(self, position: np.ndarray, z: float) -> float:
        """Right side minus left side; nonnegative when the row holds."""
        x = self.augmented(position)
        lhs = np.linalg.norm(self.cone_matrix @ x) + self.norm_weight * np.linalg.norm(x)
        return float(self.mean @ x + self.big_m * z - lhs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "j": self.j,
            "i": self.i,
            "cone_matrix": self.cone_matrix.tolist(),
            "mean": self.mean.tolist(),
            "big_m": self.big_m,
            "norm_weight": self.norm_weight,
            "selector": self.selector.tolist(),
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class ConfidenceReport:
    """Joint confidence 1 - 2 beta k that the robust rows imply the chance rows."""

    beta: float
    constraint_count: int
    confidence: float
    vacuous: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta": self.beta,
            "constraint_count": self.constraint_count,
            "confidence": self.confidence,
            "vacuous": self.vacuous,
        }


@dataclass
class PlanningProblem:
    """Linear dynamics, polytopic input/state sets, linear cost and chance rows."""

    horizon: int
    A: list[np.ndarray]
    B: list[np.ndarray]
    x0: np.ndarray
    input_rows: tuple[np.ndarray, np.ndarray]
    state_rows: list[tuple[np.ndarray, np.ndarray]]
    cost_state: np.ndarray
    cost_input: np.ndarray
    chance_rows: list[SocRow] = field(default_factory=list)
    face_counts: tuple[int, ...] = ()
    epsilon: float = 0.05
    beta: float = 1e-3
    big_m: float = 1e4
    confidence: ConfidenceReport | None = None

    def __post_init__(self) -> None:
        self.x0 = np.asarray(self.x0, dtype=float)
        n_x = self.x0.size
        if len(self.A) != self.horizon or len(self.B) != self.horizon:
            raise ValueError("one (A_t, B_t) pair is needed per step")
        n_u = self.B[0].shape[1]
        for t, (a, b) in enumerate(zip(self.A, self.B)):
            if a.shape != (n_x, n_x) or b.shape != (n_x, n_u):
                raise ValueError(f"dynamics at step {t} have shapes {a.shape}, {b.shape}")
        h_u, g_u = self.input_rows
        if h_u.shape[1] != n_u or h_u.shape[0] != g_u.size:
            raise ValueError(f"input rows have shape {h_u.shape}, expected (*, {n_u})")
        if len(self.state_rows) != self.horizon:
            raise ValueError("one state polytope is needed per step")
        for t, (h_x, g_x) in enumerate(self.state_rows):
            if h_x.shape[1] != n_x or h_x.shape[0] != g_x.size:
                raise ValueError(f"state rows at step {t + 1} have shape {h_x.shape}")
        if self.cost_state.shape != (self.horizon, n_x):
            raise ValueError(f"cost_state must have shape {(self.horizon, n_x)}")
        if self.cost_input.shape != (self.horizon, n_u):
            raise ValueError(f"cost_input must have shape {(self.horizon, n_u)}")

    @property
    def state_dim(self) -> int:
        return int(self.x0.size)

    @property
    def input_dim(self) -> int:
        return int(self.B[0].shape[1])


@dataclass(frozen=True)
class ConeBlock:
    """||G w + g||_2 <= c^T w + d over the full decision vector w."""

    G: np.ndarray
    g: np.ndarray
    c: np.ndarray
    d: float
    kind: str
    cell: Cell | None = None

    def residual(self, w: np.ndarray) -> float:
        """Amount by which the cone is violated at w (<= 0 when it holds)."""
        return float(np.linalg.norm(self.G @ w + self.g) - (self.c @ w + self.d))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "cell": list(self.cell) if self.cell is not None else None,
            "G": self.G.tolist(),
            "g": self.g.tolist(),
            "c": self.c.tolist(),
            "d": self.d,
        }


def _empty_rows(n_cols: int) -> np.ndarray:
    return np.zeros((0, n_cols))


@dataclass
class Misocp:
    """Mixed-integer SOCP: min c^T w subject to linear, cardinality and cone rows."""

    n_cols: int
    objective: np.ndarray
    column_names: list[str] = field(default_factory=list)
    binary_cols: dict[Cell, int] = field(default_factory=dict)
    state_cols: np.ndarray | None = None
    input_cols: np.ndarray | None = None
    aux_cols: dict[Cell, int] = field(default_factory=dict)
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_card: np.ndarray | None = None
    b_card: np.ndarray | None = None
    cones: list[ConeBlock] = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    x0: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.n_cols
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (n,):
            raise ValueError(f"objective must have length {n}")
        if not self.column_names:
            self.column_names = [f"w{k}" for k in range(n)]
        for rows, rhs in (("A_eq", "b_eq"), ("A_ub", "b_ub"), ("A_card", "b_card")):
            if getattr(self, rows) is None:
                setattr(self, rows, _empty_rows(n))
                setattr(self, rhs, np.zeros(0))
            if getattr(self, rows).shape[1] != n or getattr(self, rows).shape[0] != getattr(self, rhs).size:
                raise ValueError(f"{rows} has shape {getattr(self, rows).shape}, expected (*, {n})")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.array(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.array(self.upper, dtype=float)
        for col in self.binary_cols.values():
            self.lower[col] = max(self.lower[col], 0.0)
            self.upper[col] = min(self.upper[col], 1.0)

    @property
    def binary_indices(self) -> np.ndarray:
        return np.array(sorted(self.binary_cols.values()), dtype=int)

    def counts(self) -> dict[str, int]:
        face_cones = sum(1 for cone in self.cones if cone.kind == "face")
        bounded = int(np.sum(np.isfinite(self.lower)) + np.sum(np.isfinite(self.upper)))
        return {
            "columns": self.n_cols,
            "state_input_columns": int(
                (0 if self.state_cols is None else self.state_cols.size)
                + (0 if self.input_cols is None else self.input_cols.size)
            ),
            "binary_columns": len(self.binary_cols),
            "auxiliary_columns": len(self.aux_cols),
            "equality_rows": int(self.A_eq.shape[0]),
            "inequality_rows": int(self.A_ub.shape[0]),
            "cardinality_rows": int(self.A_card.shape[0]),
            "face_cones": face_cones,
            "auxiliary_cones": len(self.cones) - face_cones,
            "bound_rows": bounded,
        }

    def to_dict(self) -> dict[str, Any]:
        def finite_or_none(values: np.ndarray) -> list[float | None]:
            return [float(v) if math.isfinite(v) else None for v in values]

        return {
            "n_cols": self.n_cols,
            "column_names": list(self.column_names),
            "objective": self.objective.tolist(),
            "binary_cols": [[*cell, col] for cell, col in self.binary_cols.items()],
            "aux_cols": [[*cell, col] for cell, col in self.aux_cols.items()],
            "A_eq": self.A_eq.tolist(),
            "b_eq": self.b_eq.tolist(),
            "A_ub": self.A_ub.tolist(),
            "b_ub": self.b_ub.tolist(),
            "A_card": self.A_card.tolist(),
            "b_card": self.b_card.tolist(),
            "cones": [cone.to_dict() for cone in self.cones],
            "lower": finite_or_none(self.lower),
            "upper": finite_or_none(self.upper),
            "x0": None if self.x0 is None else np.asarray(self.x0).tolist(),
            "counts": self.counts(),
        }


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-6
    integrality_tol: float = 1e-6
    node_limit: int = 100_000
    backend: str = "CLARABEL"
    polish: bool = True


@dataclass
class PlanResult:
    """Outcome of one branch-and-bound solve."""

    status: str
    objective: float
    inputs: np.ndarray
    states: np.ndarray
    binaries: dict[Cell, int]
    node_count: int
    wall_time_s: float
    root_bound: float
    x0: np.ndarray
    solution: np.ndarray | None = None
    confidence: ConfidenceReport | None = None
    max_row_violation: float = float("nan")

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "objective": self.objective if math.isfinite(self.objective) else None,
            "inputs": self.inputs.tolist(),
            "states": self.states.tolist(),
            "x0": self.x0.tolist(),
            "binaries": [[*cell, value] for cell, value in sorted(self.binaries.items())],
            "node_count": self.node_count,
            "wall_time_s": self.wall_time_s,
            "root_bound": self.root_bound if math.isfinite(self.root_bound) else None,
            "max_row_violation": (
                self.max_row_violation if math.isfinite(self.max_row_violation) else None
            ),
            "confidence": None if self.confidence is None else self.confidence.to_dict(),
        }
