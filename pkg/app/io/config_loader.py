"""JSON run configuration ingestion.

Unknown keys are rejected with their dotted path, missing keys take the
case-study defaults, and km/h and degree fields are converted to SI here.
"""
from __future__ import annotations
import hashlib
import json
import math
import os
from dataclasses import replace
from typing import Any
from app.core.adversary import FACE_CONVENTIONS, INFLATION_MODES
from app.core.errors import ConfigError
from app.core.reformulate import ALLOCATORS
from app.models.config import (
    COVARIANCE_MODES,
    PLANNER_MODES,
    PLANNING_FRAMES,
    BigMConfig,
    OutputConfig,
    PlannerConfig,
    RunConfig,
    ScenarioConfig,
    SolverConfig,
    ValidationConfig,
)
from app.models.scenario import KMH_TO_MPS

_MISSING = object()


def derive_seed(master: int, name: str) -> int:
    """Stable 64-bit substream seed for a named consumer of the master seed."""
    digest = hashlib.sha256(f"{master}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _block(raw: Any, path: str, allowed: set[str]) -> dict[str, Any]:
    if raw is _MISSING or raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(_join(path, unknown[0]), "unknown key")
    return raw


def _number(
    block: dict[str, Any],
    key: str,
    path: str,
    default: float,
    *,
    positive: bool = False,
    nonnegative: bool = False,
    lower: float | None = None,
    upper: float | None = None,
) -> float:
    value = block.get(key, default)
    where = _join(path, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(where, f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(where, f"must be positive, got {value!r}")
    if nonnegative and value < 0:
        raise ConfigError(where, f"must be nonnegative, got {value!r}")
    if lower is not None and not value > lower:
        raise ConfigError(where, f"must be greater than {lower}, got {value!r}")
    if upper is not None and not value < upper:
        raise ConfigError(where, f"must be less than {upper}, got {value!r}")
    return float(value)


def _integer(block: dict[str, Any], key: str, path: str, default: int, minimum: int) -> int:
    value = block.get(key, default)
    where = _join(path, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(where, f"must be at least {minimum}, got {value!r}")
    return value


def _choice(block: dict[str, Any], key: str, path: str, default: str, options: tuple[str, ...]) -> str:
    value = block.get(key, default)
    if value not in options:
        raise ConfigError(_join(path, key), f"expected one of {list(options)}, got {value!r}")
    return value


def _parse_scenario(raw: Any) -> ScenarioConfig:
    path = "scenario"
    block = _block(
        raw, path,
        {"initial_state", "speed_kmh", "length_m", "width_m", "turn_spread_rad", "turn_cap_deg"},
    )
    defaults = ScenarioConfig()
    state_path = _join(path, "initial_state")
    state = _block(block.get("initial_state", _MISSING), state_path, {"y1_m", "y2_m", "theta_deg"})
    return ScenarioConfig(
        y1_m=_number(state, "y1_m", state_path, defaults.y1_m),
        y2_m=_number(state, "y2_m", state_path, defaults.y2_m),
        theta_rad=math.radians(_number(state, "theta_deg", state_path, math.degrees(defaults.theta_rad))),
        speed_mps=_number(block, "speed_kmh", path, defaults.speed_mps / KMH_TO_MPS, positive=True) * KMH_TO_MPS,
        length_m=_number(block, "length_m", path, defaults.length_m, positive=True),
        width_m=_number(block, "width_m", path, defaults.width_m, positive=True),
        turn_spread_rad=_number(block, "turn_spread_rad", path, defaults.turn_spread_rad, nonnegative=True),
        turn_cap_rad=math.radians(
            _number(block, "turn_cap_deg", path, math.degrees(defaults.turn_cap_rad), positive=True)
        ),
    )


def _parse_pair(raw: Any, path: str) -> tuple[float, float]:
    if not isinstance(raw, list) or len(raw) != 2:
        raise ConfigError(path, f"expected [lower, upper], got {raw!r}")
    lower = _number({"v": raw[0]}, "v", path, 0.0)
    upper = _number({"v": raw[1]}, "v", path, 0.0)
    if upper < lower:
        raise ConfigError(path, f"bounds are inverted: {raw!r}")
    return lower, upper


def _parse_planner(raw: Any) -> PlannerConfig:
    path = "planner"
    block = _block(
        raw, path,
        {
            "epsilon", "beta", "horizon", "sampling_time_s", "samples", "mode", "covariance_mode",
            "covariance_ridge", "inflation", "face_convention", "frame", "risk_allocation", "trajectories_csv",
            "ego_initial_state", "ego_length_m", "ego_width_m", "lane", "velocity_limits",
            "input_bounds", "big_m",
        },
    )
    d = PlannerConfig()

    ego_path = _join(path, "ego_initial_state")
    ego = _block(block.get("ego_initial_state", _MISSING), ego_path, {"x1_m", "x2_m", "x3_kmh", "x4_kmh"})
    x0 = (
        _number(ego, "x1_m", ego_path, d.ego_initial_state[0]),
        _number(ego, "x2_m", ego_path, d.ego_initial_state[1]),
        _number(ego, "x3_kmh", ego_path, d.ego_initial_state[2] / KMH_TO_MPS) * KMH_TO_MPS,
        _number(ego, "x4_kmh", ego_path, d.ego_initial_state[3] / KMH_TO_MPS) * KMH_TO_MPS,
    )

    lane_path = _join(path, "lane")
    lane = _block(block.get("lane", _MISSING), lane_path, {"lower_m", "upper_m"})
    lane_lower = _number(lane, "lower_m", lane_path, d.lane_lower_m)
    lane_upper = _number(lane, "upper_m", lane_path, d.lane_upper_m)
    if lane_upper < lane_lower:
        raise ConfigError(lane_path, f"bounds are inverted: [{lane_lower}, {lane_upper}]")

    speed_path = _join(path, "velocity_limits")
    speeds = _block(block.get("velocity_limits", _MISSING), speed_path, {"forward_kmh", "lateral_kmh"})

    input_path = _join(path, "input_bounds")
    inputs = _block(block.get("input_bounds", _MISSING), input_path, {"u1", "u2"})
    u1 = _parse_pair(inputs.get("u1", [d.input_lower[0], d.input_upper[0]]), _join(input_path, "u1"))
    u2 = _parse_pair(inputs.get("u2", [d.input_lower[1], d.input_upper[1]]), _join(input_path, "u2"))

    big_m_path = _join(path, "big_m")
    big_m = _block(block.get("big_m", _MISSING), big_m_path, {"floor", "inflation", "value"})
    fixed = big_m.get("value")
    big_m_config = BigMConfig(
        floor=_number(big_m, "floor", big_m_path, d.big_m.floor, positive=True),
        inflation=_number(big_m, "inflation", big_m_path, d.big_m.inflation, positive=True),
        value=None if fixed is None else _number(big_m, "value", big_m_path, 0.0, positive=True),
    )

    csv_path = block.get("trajectories_csv")
    if csv_path is not None and not isinstance(csv_path, str):
        raise ConfigError(_join(path, "trajectories_csv"), f"expected a path string, got {csv_path!r}")

    return PlannerConfig(
        epsilon=_number(block, "epsilon", path, d.epsilon, lower=0.0, upper=0.5),
        beta=_number(block, "beta", path, d.beta, lower=0.0, upper=0.5),
        horizon=_integer(block, "horizon", path, d.horizon, 1),
        sampling_time_s=_number(block, "sampling_time_s", path, d.sampling_time_s, positive=True),
        samples=_integer(block, "samples", path, d.samples, 2),
        mode=_choice(block, "mode", path, d.mode, PLANNER_MODES),
        covariance_mode=_choice(block, "covariance_mode", path, d.covariance_mode, COVARIANCE_MODES),
        covariance_ridge=_number(block, "covariance_ridge", path, d.covariance_ridge, nonnegative=True),
        inflation=_choice(block, "inflation", path, d.inflation, INFLATION_MODES),
        face_convention=_choice(block, "face_convention", path, d.face_convention, FACE_CONVENTIONS),
        frame=_choice(block, "frame", path, d.frame, PLANNING_FRAMES),
        risk_allocation=_choice(block, "risk_allocation", path, d.risk_allocation, tuple(ALLOCATORS)),
        trajectories_csv=csv_path,
        ego_initial_state=x0,
        ego_length_m=_number(block, "ego_length_m", path, d.ego_length_m, nonnegative=True),
        ego_width_m=_number(block, "ego_width_m", path, d.ego_width_m, nonnegative=True),
        lane_lower_m=lane_lower,
        lane_upper_m=lane_upper,
        forward_speed_mps=_number(
            speeds, "forward_kmh", speed_path, d.forward_speed_mps / KMH_TO_MPS, positive=True
        ) * KMH_TO_MPS,
        lateral_speed_mps=_number(
            speeds, "lateral_kmh", speed_path, d.lateral_speed_mps / KMH_TO_MPS, positive=True
        ) * KMH_TO_MPS,
        input_lower=(u1[0], u2[0]),
        input_upper=(u1[1], u2[1]),
        big_m=big_m_config,
    )


def _parse_solver(raw: Any) -> SolverConfig:
    path = "solver"
    block = _block(raw, path, {"gap_tol", "integrality_tol", "node_limit", "backend"})
    d = SolverConfig()
    backend = block.get("backend", d.backend)
    if not isinstance(backend, str) or not backend:
        raise ConfigError(_join(path, "backend"), f"expected a solver name, got {backend!r}")
    return SolverConfig(
        gap_tol=_number(block, "gap_tol", path, d.gap_tol, positive=True),
        integrality_tol=_number(block, "integrality_tol", path, d.integrality_tol, positive=True),
        node_limit=_integer(block, "node_limit", path, d.node_limit, 1),
        backend=backend,
    )


def _parse_validation(raw: Any) -> ValidationConfig:
    path = "validation"
    block = _block(raw, path, {"realizations", "trials", "example1_samples", "repetitions"})
    d = ValidationConfig()
    return ValidationConfig(
        realizations=_integer(block, "realizations", path, d.realizations, 1),
        trials=_integer(block, "trials", path, d.trials, 1),
        example1_samples=_integer(block, "example1_samples", path, d.example1_samples, 2),
        repetitions=_integer(block, "repetitions", path, d.repetitions, 1),
    )


def _parse_output(raw: Any) -> OutputConfig:
    path = "output"
    block = _block(raw, path, {"directory"})
    directory = block.get("directory", OutputConfig().directory)
    if not isinstance(directory, str) or not directory:
        raise ConfigError(_join(path, "directory"), f"expected a directory path, got {directory!r}")
    return OutputConfig(directory=directory)


def parse_config(raw: Any) -> RunConfig:
    """Validate a decoded JSON document into a RunConfig."""
    block = _block(raw, "", {"seed", "scenario", "planner", "solver", "validation", "output"})
    return RunConfig(
        seed=_integer(block, "seed", "", 0, 0),
        scenario=_parse_scenario(block.get("scenario", _MISSING)),
        planner=_parse_planner(block.get("planner", _MISSING)),
        solver=_parse_solver(block.get("solver", _MISSING)),
        validation=_parse_validation(block.get("validation", _MISSING)),
        output=_parse_output(block.get("output", _MISSING)),
    )


def load_config(filepath: str | None) -> RunConfig:
    """Read a RunConfig from JSON; no path gives the defaults."""
    if filepath is None:
        return RunConfig()
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"config file not found: {filepath}")
    with open(filepath, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{filepath} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def apply_overrides(
    config: RunConfig,
    *,
    seed: int | None = None,
    mode: str | None = None,
    samples: int | None = None,
    trials: int | None = None,
    realizations: int | None = None,
    out: str | None = None,
) -> RunConfig:
    """Command-line flags take precedence over the file."""
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed", f"must be nonnegative, got {seed}")
        config = replace(config, seed=seed)
    planner = config.planner
    if mode is not None:
        planner = replace(planner, mode=_choice({"mode": mode}, "mode", "planner", planner.mode, PLANNER_MODES))
    if samples is not None:
        planner = replace(planner, samples=_integer({"samples": samples}, "samples", "planner", 2, 2))
    validation = config.validation
    if trials is not None:
        validation = replace(validation, trials=_integer({"trials": trials}, "trials", "validation", 1, 1))
    if realizations is not None:
        validation = replace(
            validation,
            realizations=_integer({"realizations": realizations}, "realizations", "validation", 1, 1),
        )
    output = config.output if out is None else OutputConfig(directory=out)
    return replace(config, planner=planner, validation=validation, output=output)
