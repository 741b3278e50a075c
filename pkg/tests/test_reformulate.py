import itertools
import logging
import math

import numpy as np
import pytest

from app.core import reformulate, statkit
from app.models.estimates import GaussianEstimate
from app.models.scenario import ObstacleFaceSet, UncertainFace

SELECTOR = np.eye(2)
GRID = [np.array(p) for p in itertools.product(np.linspace(-10.0, 10.0, 9), repeat=2)]


def _estimate(r1=0.0, r2=0.0):
    mean = np.array([0.6, -0.3, 2.0])
    cov = np.array([[0.4, 0.1, 0.0], [0.1, 0.3, 0.05], [0.0, 0.05, 0.8]])
    return GaussianEstimate(mean=mean, covariance=cov, sample_count=500, r1=r1, r2=r2, beta=1e-3)


def test_uniform_allocation_for_the_case_study():
    allocation = reformulate.allocate_uniform(0.05, 10, [4])

    assert len(allocation.cells) == 40
    assert all(value == pytest.approx(0.00125) for value in allocation.cells.values())
    assert math.fsum(allocation.cells.values()) == pytest.approx(0.05, abs=1e-15)


def test_uniform_allocation_with_a_single_cell():
    allocation = reformulate.allocate_uniform(0.4, 1, [1])

    assert allocation.cells == {(1, 0, 0): 0.4}


@pytest.mark.parametrize("epsilon", [0.0, 0.5, 0.7])
def test_uniform_allocation_rejects_budget_outside_range(epsilon):
    with pytest.raises(ValueError, match="epsilon must lie in"):
        reformulate.allocate_uniform(epsilon, 10, [4])


def test_unknown_allocator_is_rejected():
    with pytest.raises(ValueError, match="unknown risk allocation"):
        reformulate.get_allocator("optimized")


def test_big_m_layout_for_the_case_study():
    layout = reformulate.big_m_rows([4], 10)

    assert len(layout.cells) == 40
    assert len(layout.cardinality_rows) == 10
    assert all(row.rhs == 3 for row in layout.cardinality_rows)
    assert layout.cells[:4] == ((1, 0, 0), (1, 0, 1), (1, 0, 2), (1, 0, 3))


def test_single_face_obstacle_forces_its_binary_to_zero():
    layout = reformulate.big_m_rows([1, 3], 2)

    single = [row for row in layout.cardinality_rows if row.j == 0]
    assert all(row.rhs == 0 and len(row.cells) == 1 for row in single)


def test_cardinality_rows_leave_one_face_active():
    row = reformulate.big_m_rows([4], 1).cardinality_rows[0]

    for bits in itertools.product((0, 1), repeat=4):
        if sum(bits) <= row.rhs:
            assert 0 in bits


def test_sqrtm_psd_squares_back():
    matrix = np.array([[2.0, 0.5], [0.5, 1.0]])

    root = reformulate.sqrtm_psd(matrix)

    assert root @ root == pytest.approx(matrix, abs=1e-12)
    assert root == pytest.approx(root.T, abs=1e-15)


def test_known_row_rejects_half_risk():
    with pytest.raises(ValueError, match="per-row risk"):
        reformulate.soc_row_known(np.zeros(3), np.eye(3), 0.5, 1e4, SELECTOR, 1, 0, 0)


def test_known_row_with_zero_mean_is_never_satisfied_without_relaxation():
    row = reformulate.soc_row_known(np.zeros(3), np.eye(3), 0.01, 1e4, SELECTOR, 1, 0, 0)

    assert all(row.margin(x, 0.0) < 0.0 for x in GRID)


def test_known_row_for_a_nearly_deterministic_face_is_the_half_plane():
    mean = np.array([1.0, -0.5, 0.3])
    row = reformulate.soc_row_known(mean, 1e-12 * np.eye(3), 0.00125, 1e4, SELECTOR, 1, 0, 0)

    for x in GRID:
        assert row.margin(x, 0.0) == pytest.approx(mean @ np.append(x, 1.0), abs=1e-4)


def test_known_row_big_m_relaxes_the_row():
    row = reformulate.soc_row_known(np.zeros(3), np.eye(3), 0.01, 1e4, SELECTOR, 1, 0, 0)

    assert all(row.margin(x, 1.0) > 0.0 for x in GRID)


def test_robust_row_with_zero_radii_matches_the_known_row():
    estimate = _estimate()
    robust = reformulate.soc_row_robust(estimate, 0.00125, 1e4, SELECTOR, 2, 0, 1)
    known = reformulate.soc_row_known(estimate.mean, estimate.covariance, 0.00125, 1e4, SELECTOR, 2, 0, 1)

    for x in GRID:
        assert robust.margin(x, 0.0) == pytest.approx(known.margin(x, 0.0), abs=1e-10)


def test_larger_radii_shrink_the_feasible_set():
    rows = [
        reformulate.soc_row_robust(_estimate(r1, r2), 0.00125, 1e4, SELECTOR, 1, 0, 0)
        for r1, r2 in [(0.0, 0.0), (0.05, 0.0), (0.05, 0.2), (0.3, 0.2)]
    ]

    for x in GRID:
        margins = [row.margin(x, 0.0) for row in rows]
        assert all(b <= a + 1e-12 for a, b in zip(margins, margins[1:]))


def test_robust_row_is_never_looser_than_the_known_row():
    estimate = _estimate(0.07, 0.15)
    robust = reformulate.soc_row_robust(estimate, 0.01, 1e4, SELECTOR, 1, 0, 0)
    known = reformulate.soc_row_known(estimate.mean, estimate.covariance, 0.01, 1e4, SELECTOR, 1, 0, 0)

    assert all(robust.margin(x, 0.0) <= known.margin(x, 0.0) for x in GRID)


def test_robust_row_carries_big_m_and_radius():
    row = reformulate.soc_row_robust(_estimate(0.07, 0.15), 0.01, 123.0, SELECTOR, 3, 0, 2)

    assert row.big_m == 123.0
    assert row.norm_weight == 0.07
    assert (row.t, row.j, row.i) == (3, 0, 2)
    inflated = _estimate().covariance + 0.15 * np.eye(3)
    expected = statkit.normal_inv_cdf(0.99) * reformulate.sqrtm_psd(inflated)
    assert row.cone_matrix == pytest.approx(expected, abs=1e-12)


def _face_set(horizon=2, r1=0.0, r2=0.0):
    faces = {
        (t, 0, i): UncertainFace(t, 0, i, _estimate(r1, r2))
        for t in range(1, horizon + 1)
        for i in range(4)
    }
    return ObstacleFaceSet(horizon=horizon, face_counts=(4,), faces=faces, position_selector=SELECTOR)


def test_chance_rows_follow_lexicographic_cell_order():
    face_set = _face_set(r1=0.1, r2=0.1)
    allocation = reformulate.allocate_uniform(0.05, 2, [4])

    robust = reformulate.build_chance_rows(face_set, allocation, 1e4)
    known = reformulate.build_chance_rows(face_set, allocation, 1e4, robust=False)

    assert [(r.t, r.j, r.i) for r in robust] == face_set.keys()
    assert all(r.norm_weight == 0.1 for r in robust)
    assert all(r.norm_weight == 0.0 for r in known)
    assert all(r.epsilon == pytest.approx(0.05 / 8) for r in robust)


def test_big_m_bound_covers_the_rows_on_the_reachable_box():
    face_set = _face_set(horizon=1)
    rows = reformulate.build_chance_rows(face_set, reformulate.allocate_uniform(0.05, 1, [4]), 1.0)
    boxes = np.array([[[-2.0, -1.0], [3.0, 1.0]]])

    big_m = reformulate.big_m_bound(rows, boxes, floor=1e-3, inflation=2.0)

    rng = np.random.default_rng(0)
    for point in rng.uniform(boxes[0, 0], boxes[0, 1], size=(200, 2)):
        for row in rows:
            assert row.margin(point, 0.0) + big_m / 2.0 >= 0.0


def test_big_m_bound_never_drops_below_the_floor():
    rows = reformulate.build_chance_rows(_face_set(1), reformulate.allocate_uniform(0.05, 1, [4]), 1.0)

    assert reformulate.big_m_bound(rows, np.zeros((1, 2, 2))) == 1e4


def test_big_m_bound_falls_back_to_floor_on_unbounded_box(caplog):
    rows = reformulate.build_chance_rows(_face_set(1), reformulate.allocate_uniform(0.05, 1, [4]), 1.0)
    boxes = np.array([[[-np.inf, 0.0], [np.inf, 1.0]]])

    with caplog.at_level(logging.WARNING):
        assert reformulate.big_m_bound(rows, boxes, floor=5e3) == 5e3
    assert "unbounded" in caplog.text


def test_with_big_m_replaces_the_relaxation_coefficient():
    rows = reformulate.build_chance_rows(_face_set(1), reformulate.allocate_uniform(0.05, 1, [4]), 1.0)

    assert all(row.big_m == 77.0 for row in reformulate.with_big_m(rows, 77.0))


def test_joint_confidence_for_the_case_study():
    report = reformulate.joint_confidence(1e-3, 10, [4])

    assert report.constraint_count == 40
    assert report.confidence == pytest.approx(0.92)
    assert not report.vacuous


def test_joint_confidence_for_a_single_row():
    assert reformulate.joint_confidence(1e-3, 1, [1]).confidence == pytest.approx(0.998)


def test_joint_confidence_warns_when_vacuous(caplog):
    with caplog.at_level(logging.WARNING):
        report = reformulate.joint_confidence(0.4, 10, [4])

    assert report.confidence == 0.0
    assert report.vacuous
    assert "vacuous" in caplog.text


def test_rows_serialize_to_plain_lists():
    rows = reformulate.build_chance_rows(_face_set(1), reformulate.allocate_uniform(0.05, 1, [4]), 1.0)

    payload = reformulate.rows_to_json(rows)

    assert payload[0]["t"] == 1
    assert isinstance(payload[0]["cone_matrix"], list)
    assert len(payload) == 4
