from __future__ import annotations
import os
import sys
import numpy as np
import pandas as pd
from app.models.scenario import TrajectoryBatch

TRAJECTORY_COLUMNS = ["sample", "t", "y1_m", "y2_m", "theta_rad"]


class LoadFile:
    """Utility class for resolving bundled resource paths."""

    @classmethod
    def resource_path(cls, relative_path: str) -> str:
        if getattr(sys, "frozen", False):
            base_path = os.path.dirname(sys.executable)
        else:
            base_path = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
        return os.path.join(base_path, relative_path)

    @classmethod
    def get_config_path(cls) -> str:
        """Return absolute path to the bundled case-study configuration."""
        return cls.resource_path(os.path.join("configs", "case_study.json"))


def ensure_trajectory_schema(df: pd.DataFrame, filepath: str = "<frame>") -> pd.DataFrame:
    """Check the trajectory columns and return them in canonical order."""
    missing = [col for col in TRAJECTORY_COLUMNS if col not in df.columns]
    if missing:
        raise ValueError(f"{filepath} is missing trajectory columns {missing}")
    df = df[TRAJECTORY_COLUMNS].copy()
    if df[TRAJECTORY_COLUMNS].isna().any().any():
        raise ValueError(f"{filepath} has empty trajectory cells")
    df["sample"] = df["sample"].astype(int)
    df["t"] = df["t"].astype(int)
    return df


def load_trajectories(filepath: str, horizon: int | None = None) -> TrajectoryBatch:
    """Load recorded adversary trajectories, one row per (sample, t) with t = 1..N."""
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"trajectory file not found: {filepath}")
    df = ensure_trajectory_schema(pd.read_csv(filepath), filepath)
    if df.duplicated(["sample", "t"]).any():
        raise ValueError(f"{filepath} repeats a (sample, t) pair")
    if df.empty:
        raise ValueError(f"{filepath} has no trajectory rows")

    steps = sorted(df["t"].unique())
    expected = list(range(1, (horizon or len(steps)) + 1))
    if steps != expected:
        raise ValueError(f"{filepath} must cover steps 1..{expected[-1]}, found {steps}")
    counts = df.groupby("sample")["t"].count()
    if (counts != len(expected)).any():
        incomplete = counts[counts != len(expected)].index.tolist()
        raise ValueError(f"{filepath} has incomplete samples {incomplete}")

    df = df.sort_values(["sample", "t"])
    shape = (counts.size, len(expected))
    return TrajectoryBatch(
        y1=df["y1_m"].to_numpy(dtype=float).reshape(shape),
        y2=df["y2_m"].to_numpy(dtype=float).reshape(shape),
        theta=df["theta_rad"].to_numpy(dtype=float).reshape(shape),
    )


def trajectories_frame(batch: TrajectoryBatch) -> pd.DataFrame:
    samples, steps = np.meshgrid(
        np.arange(batch.sample_count), np.arange(1, batch.horizon + 1), indexing="ij"
    )
    return pd.DataFrame({
        "sample": samples.ravel(),
        "t": steps.ravel(),
        "y1_m": batch.y1.ravel(),
        "y2_m": batch.y2.ravel(),
        "theta_rad": batch.theta.ravel(),
    })


def write_trajectories(batch: TrajectoryBatch, filepath: str) -> str:
    trajectories_frame(batch).to_csv(filepath, index=False)
    return filepath
