"""
Results repository — every file the simulator writes goes through here.

Outputs are plain CSV with floats in full double precision scientific
notation, plus a dotenv manifest echoing the resolved config. Writing
is deterministic: identical inputs give byte-identical files.
"""

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from dotenv import set_key

from rcdsim import __version__
from rcdsim.core.config import settings
from rcdsim.core.exceptions import MissingRecordsError
from rcdsim.core.logging import get_logger
from rcdsim.domain.events import Trajectory
from rcdsim.domain.harness import EMPIRICAL_SERIES, AggregateResult, ImpactStudy
from rcdsim.domain.models import ExperimentConfig

logger = get_logger(__name__)

TRAJECTORY_HEADER = (
    "t", "event_kind", "leaving_or_pair", "f_est", "f_opt", "f_selfish", "C_t", "dF", "dFstar",
    "incoming",
)
AGGREGATE_HEADER = ("checkpoint_T", "series", "mean", "stderr")
METRICS_HEADER = (
    "T", "mean_reg", "mean_ben", "mean_pot", "mean_reg_over_T", "mean_pot_over_T", "trial_count",
)
IMPACT_HEADER = (
    "samples", "quadratic", "warmup", "mean", "stderr", "theta", "theta_general",
    "departure_mean", "departure_stderr", "departure_bound",
    "arrival_mean", "arrival_stderr", "arrival_bound", "within_bound",
)


def fmt(value: float) -> str:
    return "%.17e" % value


class ResultsRepository:
    """Writes CSV dumps and manifests under one output directory."""

    def __init__(self, root: Optional[str | Path] = None) -> None:
        self.root = Path(root or settings.output_dir)

    def _path(self, filename: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root / filename

    def _write_rows(self, filename: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = self._path(filename)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.info("Wrote %s", path)
        return path

    # ── Trajectories ─────────────────────────────────────────

    def write_trajectory(self, trajectory: Trajectory, name: str = "trace") -> Path:
        """
        Per-step CSV of a recorded trajectory.

        Replacement rows carry the arriving function's tagged record as
        sorted-key JSON in ``incoming``; update rows leave it empty.

        Raises:
            MissingRecordsError: The trajectory was run in streaming mode.
        """
        records = trajectory.records
        if records is None:
            raise MissingRecordsError()

        incoming = [
            "" if record is None else json.dumps(record, sort_keys=True)
            for record in records.incoming_records()
        ]
        columns = zip(
            range(1, trajectory.T + 1),
            records.kinds(),
            records.labels(),
            records.f_est.tolist(),
            records.f_opt.tolist(),
            records.f_selfish.tolist(),
            records.c.tolist(),
            records.d_f.tolist(),
            records.d_fstar.tolist(),
        )
        rows = (
            [t, kind, label, *map(fmt, values), arrival]
            for (t, kind, label, *values), arrival in zip(columns, incoming)
        )
        return self._write_rows(f"{name}_trajectory.csv", TRAJECTORY_HEADER, rows)

    # ── Aggregates ───────────────────────────────────────────

    def write_aggregate(self, result: AggregateResult, name: str = "run") -> tuple[Path, Path]:
        """Long (series-labelled) CSV and wide metrics CSV of an experiment."""
        checkpoints = result.checkpoints.tolist()

        long_rows = []
        for k, T in enumerate(checkpoints):
            for series_name in EMPIRICAL_SERIES:
                stats = result.series[series_name]
                long_rows.append(
                    [T, series_name, fmt(stats.mean[k]), fmt(stats.stderr[k])]
                )
            for bound_name, curve in result.bounds.items():
                long_rows.append([T, bound_name, fmt(curve[k]), fmt(0.0)])
        long_path = self._write_rows(f"{name}_aggregate.csv", AGGREGATE_HEADER, long_rows)

        totals = result.totals
        wide_rows = (
            [
                T,
                fmt(totals["reg"][k]),
                fmt(totals["ben"][k]),
                fmt(totals["pot"][k]),
                fmt(result.series["reg_avg"].mean[k]),
                fmt(result.series["pot_avg"].mean[k]),
                result.trial_count,
            ]
            for k, T in enumerate(checkpoints)
        )
        wide_path = self._write_rows(f"{name}_metrics.csv", METRICS_HEADER, wide_rows)
        return long_path, wide_path

    def write_impact(self, study: ImpactStudy, name: str = "impact") -> Path:
        row = [
            study.samples,
            int(study.quadratic),
            study.warmup,
            *map(
                fmt,
                (
                    study.mean, study.stderr, study.theta, study.theta_general,
                    study.departure_mean, study.departure_stderr, study.departure_bound,
                    study.arrival_mean, study.arrival_stderr, study.arrival_bound,
                ),
            ),
            int(study.within_bound),
        ]
        return self._write_rows(f"{name}_impact.csv", IMPACT_HEADER, [row])

    # ── Provenance ───────────────────────────────────────────

    def write_manifest(
        self, config: ExperimentConfig, name: str = "run", command: Optional[str] = None
    ) -> Path:
        """
        Dotenv record of the given config keys plus the code version.

        Reading it back with ``load_config_file`` reproduces ``config``.
        """
        path = self._path(f"{name}_manifest.env")
        path.write_text("", encoding="utf-8")

        entries = {key: _manifest_value(value) for key, value in config.given_values().items()}
        if command:
            entries["command"] = command
        entries["code_version"] = __version__
        for key, value in entries.items():
            set_key(path, key, value, quote_mode="never")

        logger.info("Wrote manifest %s", path)
        return path


def _manifest_value(value: object) -> str:
    # repr keeps floats exact through a text round trip
    if isinstance(value, float):
        return repr(value)
    return str(value)
