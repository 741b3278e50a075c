import os

import numpy as np
import pandas as pd
import pytest

from app.core.adversary import sample_trajectories
from app.io.csv_loader import (
    TRAJECTORY_COLUMNS,
    LoadFile,
    ensure_trajectory_schema,
    load_trajectories,
    write_trajectories,
)
from app.models.scenario import AdversaryScenario


def _frame(samples=2, horizon=3):
    rows = []
    for sample in range(samples):
        for t in range(1, horizon + 1):
            rows.append({"sample": sample, "t": t, "y1_m": 49.0 + t, "y2_m": 1.75, "theta_rad": 0.1 * t})
    return pd.DataFrame(rows)


def test_config_path_points_to_the_bundled_case_study():
    path = LoadFile.get_config_path()

    assert path.endswith(os.path.join("configs", "case_study.json"))
    assert os.path.exists(path)


def test_config_path_can_be_redirected(tmp_path, monkeypatch):
    config_path = tmp_path / "case_study.json"

    monkeypatch.setattr(LoadFile, "get_config_path", classmethod(lambda cls: str(config_path)))

    assert LoadFile.get_config_path() == str(config_path)


def test_load_trajectories_reshapes_rows_by_sample(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    _frame().to_csv(csv_path, index=False)

    batch = load_trajectories(str(csv_path))

    assert batch.sample_count == 2
    assert batch.horizon == 3
    assert batch.y1[1] == pytest.approx([50.0, 51.0, 52.0])
    assert batch.theta[0, 2] == pytest.approx(0.3)


def test_load_trajectories_sorts_shuffled_rows(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    _frame().sample(frac=1.0, random_state=3).to_csv(csv_path, index=False)

    batch = load_trajectories(str(csv_path), horizon=3)

    assert batch.y1[0] == pytest.approx([50.0, 51.0, 52.0])


def test_schema_reorders_columns():
    df = _frame()[["theta_rad", "t", "sample", "y2_m", "y1_m"]]

    assert list(ensure_trajectory_schema(df).columns) == TRAJECTORY_COLUMNS


def test_load_trajectories_rejects_missing_columns(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    _frame().drop(columns=["theta_rad"]).to_csv(csv_path, index=False)

    with pytest.raises(ValueError, match="missing trajectory columns"):
        load_trajectories(str(csv_path))


def test_load_trajectories_rejects_duplicates(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    df = _frame()
    pd.concat([df, df.iloc[[0]]]).to_csv(csv_path, index=False)

    with pytest.raises(ValueError, match="repeats a"):
        load_trajectories(str(csv_path))


def test_load_trajectories_rejects_a_short_horizon(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    _frame().to_csv(csv_path, index=False)

    with pytest.raises(ValueError, match="must cover steps 1..10"):
        load_trajectories(str(csv_path), horizon=10)


def test_load_trajectories_rejects_incomplete_samples(tmp_path):
    csv_path = tmp_path / "trajectories.csv"
    _frame().iloc[:-1].to_csv(csv_path, index=False)

    with pytest.raises(ValueError, match="incomplete samples \\[1\\]"):
        load_trajectories(str(csv_path))


def test_load_trajectories_requires_the_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="trajectory file not found"):
        load_trajectories(str(tmp_path / "missing.csv"))


def test_load_trajectories_rejects_a_header_without_rows(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(TRAJECTORY_COLUMNS) + "\n", encoding="utf-8")

    with pytest.raises(ValueError, match="no trajectory rows"):
        load_trajectories(str(path))


def test_written_trajectories_load_back(tmp_path):
    batch = sample_trajectories(AdversaryScenario(), 4, base_seed=2)

    path = write_trajectories(batch, str(tmp_path / "adversary.csv"))
    loaded = load_trajectories(path, horizon=10)

    assert np.allclose(loaded.y1, batch.y1)
    assert np.allclose(loaded.theta, batch.theta)
