import numpy as np
import pytest

from app.core.backend import ConicBackend, backend_solve
from app.models.planning import ConeBlock, Misocp


def _abs_cone():
    # |w0| <= w0 + 2
    return ConeBlock(G=np.array([[1.0]]), g=np.zeros(1), c=np.array([1.0]), d=2.0, kind="face")


def test_scalar_cone_minimum():
    m = Misocp(n_cols=1, objective=np.array([1.0]), cones=[_abs_cone()])

    result = backend_solve(m)

    assert result.status == "optimal"
    assert result.objective == pytest.approx(-1.0, abs=1e-6)
    assert result.x == pytest.approx([-1.0], abs=1e-6)


def test_linear_program_without_cones():
    m = Misocp(
        n_cols=2,
        objective=np.array([-1.0, -2.0]),
        A_ub=np.array([[1.0, 1.0]]),
        b_ub=np.array([3.0]),
        lower=np.zeros(2),
        upper=np.array([np.inf, 2.0]),
    )

    result = backend_solve(m)

    assert result.status == "optimal"
    assert result.objective == pytest.approx(-5.0, abs=1e-6)
    assert result.x == pytest.approx([1.0, 2.0], abs=1e-5)


def test_infeasible_relaxation():
    m = Misocp(
        n_cols=1,
        objective=np.array([1.0]),
        A_ub=np.array([[1.0], [-1.0]]),
        b_ub=np.array([-1.0, -1.0]),
    )

    assert backend_solve(m).status == "infeasible"


def test_unbounded_relaxation():
    m = Misocp(n_cols=1, objective=np.array([1.0]))

    assert backend_solve(m).status == "unbounded"


def test_binary_bounds_are_parameters():
    # w1 is binary; w0 <= 1 + 4 w1
    m = Misocp(
        n_cols=2,
        objective=np.array([-1.0, 0.0]),
        A_ub=np.array([[1.0, -4.0]]),
        b_ub=np.array([1.0]),
        binary_cols={(1, 0, 0): 1},
    )
    backend = ConicBackend(m)

    relaxed = backend.solve()
    fixed_off = backend.solve(np.zeros(1), np.zeros(1))
    fixed_on = backend.solve(np.ones(1), np.ones(1))

    assert relaxed.objective == pytest.approx(-5.0, abs=1e-6)
    assert fixed_off.objective == pytest.approx(-1.0, abs=1e-6)
    assert fixed_on.objective == pytest.approx(-5.0, abs=1e-6)
