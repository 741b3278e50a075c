import math

import numpy as np
import pytest
from scipy import integrate

from app.core import adversary
from app.core.errors import DegenerateCovarianceError
from app.models.scenario import AdversaryScenario, AdversaryState, wrap_angle


def test_wrap_angle_keeps_headings_in_half_open_interval():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3.0 * math.pi / 2.0) == pytest.approx(-math.pi / 2.0)
    assert AdversaryState(0.0, 0.0, 2.0 * math.pi + 0.1).theta == pytest.approx(0.1)


def test_scenario_rejects_nonpositive_speed():
    with pytest.raises(ValueError, match="speed_mps must be positive"):
        AdversaryScenario(speed_mps=0.0)


def test_turn_rates_stay_above_lower_endpoint():
    scenario = AdversaryScenario()
    rng = np.random.default_rng(0)

    omegas = np.array([adversary.sample_turn_rates(scenario, rng) for _ in range(500)])

    lower = (math.pi - 0.66) / 22.0
    assert lower == pytest.approx(0.11279, abs=1e-5)
    assert np.all(omegas >= lower - 1e-15)


def test_turn_rates_respect_the_turn_cap():
    scenario = AdversaryScenario()
    uniforms = np.random.default_rng(1).random((2000, scenario.horizon))

    omegas = adversary.turn_rates_from_uniforms(scenario, uniforms)

    assert np.all(omegas.sum(axis=1) <= math.pi / 2.0 + 1e-12)


def test_turn_cap_collapses_the_draw_to_the_clipped_endpoint():
    scenario = AdversaryScenario()

    omegas = adversary.turn_rates_from_uniforms(scenario, np.ones((1, scenario.horizon)))

    assert omegas.sum() == pytest.approx(math.pi / 2.0, abs=1e-12)
    assert omegas[0, -1] < scenario.turn_rate_bounds[0]


def test_first_turn_rate_mean_is_the_interval_midpoint():
    scenario = AdversaryScenario()
    uniforms = np.random.default_rng(2).random((100_000, scenario.horizon))

    omegas = adversary.turn_rates_from_uniforms(scenario, uniforms)

    assert omegas[:, 0].mean() == pytest.approx(math.pi / 22.0, abs=2e-4)


def test_straight_line_step():
    scenario = AdversaryScenario()

    states = adversary.propagate_adversary(scenario, np.zeros(scenario.horizon))

    assert states[0].y1 == pytest.approx(49.0 + 0.4 * 22.0 / 3.6)
    assert states[0].y1 == pytest.approx(51.4444, abs=1e-4)
    assert all(state.y2 == pytest.approx(1.75) for state in states)
    assert all(state.theta == 0.0 for state in states)


def test_heading_after_horizon_is_the_sum_of_turn_rates():
    scenario = AdversaryScenario()
    omegas = adversary.sample_turn_rates(scenario, np.random.default_rng(5))

    states = adversary.propagate_adversary(scenario, omegas)

    assert states[-1].theta == pytest.approx(omegas.sum(), abs=1e-12)


def test_propagation_uses_the_heading_before_each_step():
    scenario = AdversaryScenario(horizon=2)
    omegas = np.array([0.3, 0.2])

    states = adversary.propagate_adversary(scenario, omegas)
    step = scenario.sampling_time_s * scenario.speed_mps

    assert states[0].y2 == pytest.approx(1.75)
    assert states[1].y1 == pytest.approx(49.0 + step + step * math.cos(0.3))
    assert states[1].y2 == pytest.approx(1.75 + step * math.sin(0.3))


def test_face_values_at_the_origin():
    d = adversary.face_coefficients(AdversaryState(0.0, 0.0, 0.0), 4.0, 2.0)

    assert d[0] @ np.array([3.0, 0.0, 1.0]) == pytest.approx(1.0)
    assert list(d @ np.array([0.0, 0.0, 1.0])) == pytest.approx([-2.0, -1.0, -2.0, -1.0])


def _inside_oracle(point, center, theta, length, width, convention):
    offset = np.asarray(point) - np.asarray(center)
    sign = 1.0 if convention == "heading_aligned" else -1.0
    axis = np.array([math.cos(theta), sign * math.sin(theta)])
    normal = np.array([-sign * math.sin(theta), math.cos(theta)])
    return abs(offset @ axis) < length / 2.0 and abs(offset @ normal) < width / 2.0


@pytest.mark.parametrize("convention", ["printed", "heading_aligned"])
def test_face_disjunction_matches_rectangle_membership(convention):
    rng = np.random.default_rng(9)
    center = (3.0, -1.0)
    checked = 0
    for theta in np.linspace(-math.pi, math.pi, 13):
        d = adversary.face_coefficients(AdversaryState(*center, theta), 4.5, 2.0, convention)
        for point in rng.uniform(-6.0, 6.0, size=(60, 2)) + np.array(center):
            values = d @ np.append(point, 1.0)
            if np.min(np.abs(values)) < 1e-6:
                continue
            inside = _inside_oracle(point, center, theta, 4.5, 2.0, convention)
            assert inside == bool(np.all(values < 0.0))
            checked += 1
    assert checked > 500


def test_conventions_coincide_at_axis_headings():
    for theta in (0.0, math.pi):
        state = AdversaryState(1.0, 2.0, theta)
        printed = adversary.face_coefficients(state, 4.5, 2.0, "printed")
        aligned = adversary.face_coefficients(state, 4.5, 2.0, "heading_aligned")
        assert printed == pytest.approx(aligned, abs=1e-12)


def test_printed_box_tilts_against_a_left_turn():
    state = AdversaryState(0.0, 0.0, 0.3)

    printed = adversary.face_coefficients(state, 4.5, 2.0, "printed")
    aligned = adversary.face_coefficients(state, 4.5, 2.0, "heading_aligned")

    assert printed[0, :2] == pytest.approx([math.cos(0.3), -math.sin(0.3)])
    assert aligned[0, :2] == pytest.approx([math.cos(0.3), math.sin(0.3)])


def test_unknown_face_convention_is_rejected():
    with pytest.raises(ValueError, match="unknown face convention"):
        adversary.face_coefficients(AdversaryState(0.0, 0.0, 0.0), 4.5, 2.0, "mirrored")


def test_inflation_with_zero_ego_is_identity():
    d = adversary.face_coefficients(AdversaryState(1.0, 2.0, 0.4), 4.5, 2.0)

    assert np.array_equal(adversary.inflate_for_ego(d, 0.0, 0.0), d)


def test_inflation_shifts_face_offsets_by_ego_half_dimensions():
    d = adversary.face_coefficients(AdversaryState(0.0, 0.0, 0.0), 4.0, 2.0)

    inflated = adversary.inflate_for_ego(d, 4.5, 2.0)

    assert d[0, 2] == pytest.approx(-2.0)
    assert inflated[0, 2] == pytest.approx(-4.25)
    assert inflated[1, 2] == pytest.approx(-2.0)


def test_inflated_safe_set_is_inside_the_original():
    rng = np.random.default_rng(4)
    d = adversary.face_coefficients(AdversaryState(0.0, 0.0, 0.7), 4.5, 2.0)
    for mode in adversary.INFLATION_MODES:
        inflated = adversary.inflate_for_ego(d, 4.5, 2.0, mode)
        for point in rng.uniform(-8.0, 8.0, size=(200, 2)):
            x = np.append(point, 1.0)
            assert np.all((inflated @ x > 0.0) <= (d @ x > 0.0))


def test_diagonal_inflation_uses_half_diagonal_on_every_face():
    d = adversary.face_coefficients(AdversaryState(0.0, 0.0, 0.0), 4.0, 2.0)

    inflated = adversary.inflate_for_ego(d, 3.0, 4.0, "diagonal")

    assert inflated[:, 2] - d[:, 2] == pytest.approx([-2.5] * 4)


def test_face_sample_grid_shape_and_determinism():
    scenario = AdversaryScenario(seed=12)

    first = adversary.build_face_samples(scenario, 50, 4.5, 2.0)
    second = adversary.build_face_samples(scenario, 50, 4.5, 2.0)

    assert len(first) == 40
    assert all(cell.count == 50 and cell.dimension == 3 for cell in first.values())
    assert all(np.array_equal(first[key].samples, second[key].samples) for key in first)


def test_trajectories_do_not_depend_on_batching():
    scenario = AdversaryScenario()

    whole = adversary.sample_trajectories(scenario, 5, base_seed=10)
    tail = adversary.sample_trajectories(scenario, 3, base_seed=12)

    assert np.array_equal(whole.theta[2:], tail.theta)
    assert np.array_equal(whole.y1[2:], tail.y1)


def test_heading_is_nondecreasing_and_capped():
    batch = adversary.sample_trajectories(AdversaryScenario(), 300, base_seed=3)

    assert np.all(np.diff(batch.theta, axis=1) >= 0.0)
    assert np.all(batch.theta[:, -1] <= math.pi / 2.0 + 1e-12)


def test_face_two_mean_at_first_step_matches_quadrature():
    scenario = AdversaryScenario()
    lower, upper = scenario.turn_rate_bounds

    grid = adversary.build_face_samples(scenario, 20_000, 4.5, 2.0, base_seed=100)
    expected, _ = integrate.quad(lambda w: math.sin(w) / (upper - lower), lower, upper)

    assert grid[(1, 1)].samples[:, 0].mean() == pytest.approx(expected, abs=1e-3)


def test_first_step_faces_need_a_ridge():
    scenario = AdversaryScenario()
    grid = adversary.build_face_samples(scenario, 200, 4.5, 2.0)

    with pytest.raises(DegenerateCovarianceError):
        adversary.build_obstacle_faces(grid, scenario.horizon, 1e-3)
    faces = adversary.build_obstacle_faces(grid, scenario.horizon, 1e-3, ridge=1e-9)

    assert faces.face_counts == (4,)
    assert len(faces.keys()) == 40
    assert faces.keys()[0] == (1, 0, 0)
    assert faces[(5, 0, 3)].estimate.dimension == 3
