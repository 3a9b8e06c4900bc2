"""
Unit tests for the results repository.

Tests cover:
  - trajectory CSV layout, including the incoming-function column
  - manifest round trip through the config loader
  - deterministic output
"""

import csv
import json

import pytest

from rcdsim.core.exceptions import MissingRecordsError
from rcdsim.domain.cost_functions import CostFunction
from rcdsim.domain.harness import single_realization_trace
from rcdsim.domain.models import ExperimentConfig
from rcdsim.infrastructure.storage import ResultsRepository, load_config_file
from rcdsim.infrastructure.storage.repository import TRAJECTORY_HEADER


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    return ExperimentConfig(n=3, kappa=4.0, p=0.75, t=64, seed=9, out=str(tmp_path / "out"))


class TestWriteTrajectory:
    """Tests for ResultsRepository.write_trajectory()."""

    def test_layout(self, small_config):
        repo = ResultsRepository(small_config.out)
        path = repo.write_trajectory(single_realization_trace(small_config), "trace")

        with path.open() as handle:
            rows = list(csv.reader(handle))

        assert tuple(rows[0]) == TRAJECTORY_HEADER
        assert len(rows) == 1 + 64
        assert [row[0] for row in rows[1:4]] == ["1", "2", "3"]
        for row in rows[1:]:
            assert row[1] in {"update", "replacement"}
            assert "e" in row[3]

    def test_incoming_column(self, small_config):
        """Replacement rows carry the arriving function as JSON; update rows leave it empty."""
        # Arrange
        trajectory = single_realization_trace(small_config)
        path = ResultsRepository(small_config.out).write_trajectory(trajectory)

        # Act
        with path.open() as handle:
            rows = list(csv.DictReader(handle))

        # Assert
        replaced = [row for row in rows if row["event_kind"] == "replacement"]
        assert len(replaced) == trajectory.replacement_count > 0
        assert all(row["incoming"] == "" for row in rows if row["event_kind"] == "update")
        for row in replaced:
            step = int(row["t"]) - 1
            assert CostFunction.from_record(json.loads(row["incoming"])) == trajectory.records.incoming[step]

    def test_streaming_trajectory_rejected(self, small_config, tmp_path):
        trajectory = single_realization_trace(small_config)
        trajectory.records = None
        with pytest.raises(MissingRecordsError):
            ResultsRepository(tmp_path).write_trajectory(trajectory)

    def test_byte_identical(self, small_config, tmp_path):
        first = ResultsRepository(tmp_path / "a").write_trajectory(single_realization_trace(small_config))
        second = ResultsRepository(tmp_path / "b").write_trajectory(single_realization_trace(small_config))
        assert first.read_bytes() == second.read_bytes()


class TestWriteManifest:
    """Tests for ResultsRepository.write_manifest()."""

    def test_round_trip(self, small_config):
        path = ResultsRepository(small_config.out).write_manifest(small_config, "run", command="run")

        reparsed = ExperimentConfig.from_mapping(load_config_file(path))

        assert reparsed == small_config

    def test_round_trip_keeps_inexact_floats(self, tmp_path):
        cfg = ExperimentConfig(kappa=10.0, rho_r=0.1 + 0.2, alpha=1 / 3)
        path = ResultsRepository(tmp_path).write_manifest(cfg)
        assert ExperimentConfig.from_mapping(load_config_file(path)) == cfg

    def test_carries_code_version(self, small_config):
        from rcdsim import __version__

        path = ResultsRepository(small_config.out).write_manifest(small_config)
        assert f"code_version={__version__}" in path.read_text().splitlines()
