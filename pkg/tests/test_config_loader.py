import json
import math

import pytest

from app.core.errors import ConfigError
from app.io.config_loader import apply_overrides, config_hash, derive_seed, load_config, parse_config
from app.io.csv_loader import LoadFile
from app.models.config import RunConfig


def test_bundled_config_matches_the_defaults():
    config = load_config(LoadFile.get_config_path())
    defaults = RunConfig()

    assert config.planner == defaults.planner
    assert config.solver == defaults.solver
    assert config.validation == defaults.validation
    assert config.scenario.turn_cap_rad == pytest.approx(defaults.scenario.turn_cap_rad)
    assert config.scenario.speed_mps == pytest.approx(defaults.scenario.speed_mps)


def test_missing_path_gives_the_defaults():
    config = load_config(None)

    assert config.planner.horizon == 10
    assert config.planner.epsilon == 0.05
    assert config.scenario.speed_mps == pytest.approx(22.0 / 3.6)


def test_units_are_converted_to_si():
    config = parse_config({
        "scenario": {"initial_state": {"theta_deg": 90.0}, "speed_kmh": 36.0, "turn_cap_deg": 45.0},
        "planner": {"ego_initial_state": {"x3_kmh": 72.0}, "velocity_limits": {"forward_kmh": 18.0}},
    })

    assert config.scenario.theta_rad == pytest.approx(math.pi / 2.0)
    assert config.scenario.speed_mps == pytest.approx(10.0)
    assert config.scenario.turn_cap_rad == pytest.approx(math.pi / 4.0)
    assert config.planner.ego_initial_state[2] == pytest.approx(20.0)
    assert config.planner.forward_speed_mps == pytest.approx(5.0)


def test_unknown_keys_are_reported_with_their_path():
    with pytest.raises(ConfigError, match="planner.big_m.ceiling: unknown key"):
        parse_config({"planner": {"big_m": {"ceiling": 5.0}}})


@pytest.mark.parametrize("epsilon", [0.0, 0.5, -0.1, "0.05"])
def test_epsilon_outside_range_is_rejected(epsilon):
    with pytest.raises(ConfigError, match="planner.epsilon"):
        parse_config({"planner": {"epsilon": epsilon}})


def test_mode_must_be_known():
    with pytest.raises(ConfigError, match="planner.mode"):
        parse_config({"planner": {"mode": "optimistic"}})


def test_planning_frame_is_a_choice():
    assert parse_config({}).planner.frame == "adversary"
    assert parse_config({"planner": {"frame": "world"}}).planner.frame == "world"
    with pytest.raises(ConfigError, match="planner.frame"):
        parse_config({"planner": {"frame": "ego"}})


def test_input_bounds_must_be_ordered():
    with pytest.raises(ConfigError, match="planner.input_bounds.u1: bounds are inverted"):
        parse_config({"planner": {"input_bounds": {"u1": [10.0, -3.0]}}})


def test_fixed_big_m_is_kept():
    config = parse_config({"planner": {"big_m": {"value": 500.0}}})

    assert config.planner.big_m.value == 500.0
    assert config.planner.big_m.floor == 1e4


def test_boolean_is_not_an_integer():
    with pytest.raises(ConfigError, match="planner.horizon: expected an integer"):
        parse_config({"planner": {"horizon": True}})


def test_load_config_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"seed\": ", encoding="utf-8")

    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(path))


def test_load_config_requires_the_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="config file not found"):
        load_config(str(tmp_path / "missing.json"))


def test_load_config_reads_partial_documents(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 7, "planner": {"samples": 500}}), encoding="utf-8")

    config = load_config(str(path))

    assert config.seed == 7
    assert config.planner.samples == 500
    assert config.planner.mode == "robust"


def test_overrides_take_precedence():
    config = apply_overrides(RunConfig(), seed=3, mode="known", samples=500, trials=10, out="runs")

    assert config.seed == 3
    assert config.planner.mode == "known"
    assert config.planner.samples == 500
    assert config.validation.trials == 10
    assert config.output.directory == "runs"


def test_overrides_are_validated():
    with pytest.raises(ConfigError, match="planner.samples"):
        apply_overrides(RunConfig(), samples=1)
    with pytest.raises(ConfigError, match="seed"):
        apply_overrides(RunConfig(), seed=-1)


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(0, "sampling") == derive_seed(0, "sampling")
    assert derive_seed(0, "sampling") != derive_seed(0, "validation")
    assert derive_seed(0, "sampling") != derive_seed(1, "sampling")
    assert 0 <= derive_seed(123, "study/4") < 2**64


def test_config_hash_tracks_content():
    assert config_hash(RunConfig()) == config_hash(RunConfig())
    assert config_hash(RunConfig()) != config_hash(RunConfig(seed=1))
