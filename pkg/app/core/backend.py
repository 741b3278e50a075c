"""Continuous SOCP relaxations through cvxpy.

The relaxation of a Misocp is canonicalized once; branch-and-bound nodes only
change the bounds on the binary columns, which are cvxpy parameters.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
import cvxpy as cp
import numpy as np
from app.core.errors import SolverError
from app.models.planning import Misocp

logger = logging.getLogger(__name__)

_OPTIMAL = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}
_INFEASIBLE = {cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE}
_UNBOUNDED = {cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE}


@dataclass(frozen=True)
class RelaxationResult:
    status: str
    x: np.ndarray | None
    objective: float


class ConicBackend:
    """Continuous relaxation of a Misocp with parametrized binary bounds."""

    def __init__(self, misocp: Misocp, solver: str = "CLARABEL") -> None:
        self.misocp = misocp
        self.solver = solver
        self.binary_idx = misocp.binary_indices
        n = misocp.n_cols
        self.w = cp.Variable(n)
        constraints = []
        if misocp.A_eq.shape[0]:
            constraints.append(misocp.A_eq @ self.w == misocp.b_eq)
        linear = np.vstack([misocp.A_ub, misocp.A_card])
        if linear.shape[0]:
            constraints.append(linear @ self.w <= np.concatenate([misocp.b_ub, misocp.b_card]))
        for cone in misocp.cones:
            constraints.append(cp.SOC(cone.c @ self.w + cone.d, cone.G @ self.w + cone.g))
        continuous = np.setdiff1d(np.arange(n), self.binary_idx)
        for k in continuous:
            if np.isfinite(misocp.lower[k]):
                constraints.append(self.w[k] >= misocp.lower[k])
            if np.isfinite(misocp.upper[k]):
                constraints.append(self.w[k] <= misocp.upper[k])
        self.lower = None
        self.upper = None
        if self.binary_idx.size:
            self.lower = cp.Parameter(self.binary_idx.size)
            self.upper = cp.Parameter(self.binary_idx.size)
            constraints.append(self.w[self.binary_idx] >= self.lower)
            constraints.append(self.w[self.binary_idx] <= self.upper)
        self.problem = cp.Problem(cp.Minimize(misocp.objective @ self.w), constraints)

    def solve(
        self,
        lower: np.ndarray | None = None,
        upper: np.ndarray | None = None,
        node: int | None = None,
    ) -> RelaxationResult:
        """Solve with binaries bounded to [lower, upper] (defaults: [0, 1])."""
        if self.binary_idx.size:
            self.lower.value = (
                self.misocp.lower[self.binary_idx] if lower is None else np.asarray(lower, dtype=float)
            )
            self.upper.value = (
                self.misocp.upper[self.binary_idx] if upper is None else np.asarray(upper, dtype=float)
            )
        try:
            self.problem.solve(solver=self.solver, verbose=False)
        except cp.error.SolverError as exc:
            raise SolverError(f"conic backend failed: {exc}", node) from exc
        status = self.problem.status
        if status in _OPTIMAL:
            if status == cp.OPTIMAL_INACCURATE:
                logger.debug("node %s solved inaccurately", node)
            return RelaxationResult("optimal", np.asarray(self.w.value, dtype=float), float(self.problem.value))
        if status in _INFEASIBLE:
            return RelaxationResult("infeasible", None, float("inf"))
        if status in _UNBOUNDED:
            return RelaxationResult("unbounded", None, float("-inf"))
        raise SolverError(f"conic backend returned status {status!r}", node)


def backend_solve(misocp: Misocp, solver: str = "CLARABEL") -> RelaxationResult:
    """Solve the continuous relaxation of misocp once (binaries relaxed to [0, 1])."""
    return ConicBackend(misocp, solver).solve()
