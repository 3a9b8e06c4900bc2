"""
Trial worker — runs one seeded trajectory of an experiment.

Each trial is fully determined by (config, trial index): its randomness
comes from the trial's own derived seed, never from scheduling. The pool
maps trials in order, so the reduction downstream sees the same
sequence of results whatever the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from rcdsim.core.config import settings
from rcdsim.core.logging import get_logger, setup_logging
from rcdsim.domain.allocation import AllocationState, initial_state
from rcdsim.domain.cost_functions import ReplacementDistribution
from rcdsim.domain.events import EventStream, EventStreamConfig, Trajectory, run_trajectory
from rcdsim.domain.models import ExperimentConfig
from rcdsim.domain.rcd import RcdConfig
from rcdsim.utils.seeding import split_trial_seed, trial_seed

logger = get_logger(__name__)


@dataclass
class TrialResult:
    """Checkpoint series of one trial (running totals, not averages)."""

    trial_index: int
    c0: float
    replacement_count: int
    reg: np.ndarray
    ben: np.ndarray
    pot: np.ndarray
    c: np.ndarray


def build_trial(
    cfg: ExperimentConfig, trial_index: int
) -> tuple[AllocationState, EventStream, RcdConfig]:
    """Initial state, event stream and step rule of trial ``trial_index``."""
    event_seed, function_rng = split_trial_seed(trial_seed(cfg.seed, trial_index))
    params = cfg.class_params
    dist = ReplacementDistribution(cfg.mode, params, function_rng)
    state = initial_state(cfg.n, dist)
    stream = EventStream(
        EventStreamConfig(p=cfg.update_probability, n=cfg.n, dist=dist, seed=event_seed)
    )
    return state, stream, RcdConfig(params=params, step=cfg.step)


def trace_trial(cfg: ExperimentConfig, trial_index: int = 0) -> Trajectory:
    """Recorded trajectory of one trial."""
    state, stream, rcd = build_trial(cfg, trial_index)
    return run_trajectory(state, stream, rcd, cfg.t, record=True)


def run_trial(cfg: ExperimentConfig, trial_index: int, checkpoints: Sequence[int]) -> TrialResult:
    """
    Run one streaming trajectory and keep the metric totals at checkpoints.

    Args:
        cfg: The experiment.
        trial_index: Index of the trial (selects the derived seed).
        checkpoints: Steps at which totals are snapshotted.
    """
    state, stream, rcd = build_trial(cfg, trial_index)
    trajectory = run_trajectory(state, stream, rcd, cfg.t, record=False, checkpoints=checkpoints)
    snapshots = trajectory.checkpoint_ledgers

    logger.debug(
        "Trial %d done: Reg_T=%.6e, replacements=%d",
        trial_index,
        trajectory.ledger.reg,
        trajectory.replacement_count,
    )
    return TrialResult(
        trial_index=trial_index,
        c0=trajectory.c0,
        replacement_count=trajectory.replacement_count,
        reg=np.array([s.reg for s in snapshots]),
        ben=np.array([s.ben for s in snapshots]),
        pot=np.array([s.pot for s in snapshots]),
        c=np.array(trajectory.checkpoint_c),
    )


def run_trials(
    cfg: ExperimentConfig,
    checkpoints: Sequence[int],
    workers: int | None = None,
) -> list[TrialResult]:
    """
    Run every trial of ``cfg``, in process or on a process pool.

    Results come back in trial order either way.
    """
    workers = workers or settings.workers
    task = partial(run_trial, cfg, checkpoints=list(checkpoints))
    indices = range(cfg.trials)

    if workers <= 1 or cfg.trials == 1:
        return [task(i) for i in indices]

    logger.info("Dispatching %d trials to %d worker processes", cfg.trials, workers)
    with ProcessPoolExecutor(max_workers=workers, initializer=setup_logging) as pool:
        return list(pool.map(task, indices))
