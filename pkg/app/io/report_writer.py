"""JSON and CSV outputs of the command-line runs."""
from __future__ import annotations
import json
import math
import os
from typing import Any, Mapping
import numpy as np
import pandas as pd
from app.core import moments
from app.models.planning import Cell, PlanResult
from app.models.reports import Example1Result, ViolationReport
from app.models.scenario import ObstacleFaceSet

PLAN_FILE = "plan.json"
PLAN_TRAJECTORY_FILE = "trajectory.csv"
MISOCP_FILE = "misocp.json"


def _clean(value: Any) -> Any:
    """Replace non-finite floats by None so the output stays strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, np.generic):
        return _clean(value.item())
    return value


def write_json(payload: Mapping[str, Any], filepath: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(_clean(dict(payload)), f, indent=2, allow_nan=False)
        f.write("\n")
    return filepath


def read_json(filepath: str) -> dict[str, Any]:
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"file not found: {filepath}")
    with open(filepath, encoding="utf-8") as f:
        return json.load(f)


def plan_trajectory_frame(result: PlanResult) -> pd.DataFrame:
    """Rows t = 0..N: state x_t, input u_t (empty at N) and the face binaries z_t (empty at 0)."""
    horizon = result.states.shape[0]
    states = np.vstack([result.x0, result.states])
    inputs = np.vstack([result.inputs, np.full((1, result.inputs.shape[1]), np.nan)])
    by_step: dict[int, list[tuple[Cell, int]]] = {}
    for cell, value in sorted(result.binaries.items()):
        by_step.setdefault(cell[0], []).append((cell, value))
    z = [""] + [
        " ".join(f"{j}:{i}={value}" for (_, j, i), value in by_step.get(t, []))
        for t in range(1, horizon + 1)
    ]
    return pd.DataFrame({
        "t": np.arange(horizon + 1),
        "x1_m": states[:, 0],
        "x2_m": states[:, 1],
        "x3_mps": states[:, 2],
        "x4_mps": states[:, 3],
        "u1_mps2": inputs[:, 0],
        "u2_mps2": inputs[:, 1],
        "z": z,
    })


def write_plan(
    result: PlanResult,
    directory: str,
    provenance: Mapping[str, Any],
    misocp_payload: Mapping[str, Any] | None = None,
) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = [write_json({**provenance, **result.to_dict()}, os.path.join(directory, PLAN_FILE))]
    if result.states.size:
        path = os.path.join(directory, PLAN_TRAJECTORY_FILE)
        plan_trajectory_frame(result).to_csv(path, index=False)
        written.append(path)
    if misocp_payload is not None:
        written.append(write_json(misocp_payload, os.path.join(directory, MISOCP_FILE)))
    return written


def load_plan_positions(filepath: str) -> tuple[str, np.ndarray]:
    """Status and ego positions (N, 2) of a written plan."""
    payload = read_json(filepath)
    for key in ("status", "states"):
        if key not in payload:
            raise ValueError(f"{filepath} is not a plan file: missing {key!r}")
    states = np.asarray(payload["states"], dtype=float)
    if states.size == 0:
        return payload["status"], np.zeros((0, 2))
    if states.ndim != 2 or states.shape[1] < 2:
        raise ValueError(f"{filepath} has states of shape {states.shape}")
    return payload["status"], states[:, :2]


def write_violation(report: ViolationReport, directory: str, provenance: Mapping[str, Any]) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    json_path = write_json({**provenance, **report.to_dict()}, os.path.join(directory, "violation.json"))
    csv_path = os.path.join(directory, "violation_per_step.csv")
    pd.DataFrame({
        "t": np.arange(1, report.per_step.size + 1),
        "violations": report.per_step,
        "probability": report.per_step / report.realizations,
    }).to_csv(csv_path, index=False)
    return [json_path, csv_path]


def write_example1(
    results: Mapping[str, Example1Result], directory: str, provenance: Mapping[str, Any]
) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    json_path = write_json(
        {**provenance, "modes": [result.summary() for result in results.values()]},
        os.path.join(directory, "example1.json"),
    )
    frame = pd.DataFrame({"trial": np.arange(next(iter(results.values())).trials)})
    for mode, result in results.items():
        frame[f"{mode}_x_star"] = result.x_star
        frame[f"{mode}_true_probability"] = result.true_probability
        frame[f"{mode}_violated"] = result.violated.astype(int)
    csv_path = os.path.join(directory, "example1_trials.csv")
    frame.to_csv(csv_path, index=False)
    return [json_path, csv_path]


def face_estimates_payload(face_set: ObstacleFaceSet) -> list[dict[str, Any]]:
    """Per-face moments and radii; ``r2_unrooted`` is the diagonal radius before the square root."""
    payload = []
    for t, j, i in face_set.keys():
        estimate = face_set[(t, j, i)].estimate
        unrooted = moments.cov_radius_unrooted(
            estimate.covariance, estimate.dimension, estimate.sample_count, estimate.beta
        )
        payload.append({"t": t, "j": j, "i": i, **estimate.to_dict(), "r2_unrooted": unrooted})
    return payload


def write_study(frame: pd.DataFrame, directory: str, provenance: Mapping[str, Any]) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, "study.csv")
    frame.to_csv(csv_path, index=False)
    summary = (
        frame.groupby("case")[["terminal_x1_m", "violation_probability", "solve_time_s"]]
        .median()
        .reset_index()
        .to_dict(orient="records")
    )
    json_path = write_json({**provenance, "medians": summary}, os.path.join(directory, "study.json"))
    return [csv_path, json_path]
