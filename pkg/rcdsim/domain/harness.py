"""
Experiment harness — Monte Carlo orchestration.

Runs seeded trajectories, reduces them to checkpoint means and standard
errors, overlays the closed-form bounds and flags checkpoints where an
empirical mean exceeds its bound by more than three standard errors.
Bounds hold in expectation only, so a flag is a statistical signal and
never an exception.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rcdsim.core.config import settings
from rcdsim.core.exceptions import InfeasibleStateError
from rcdsim.core.logging import get_logger
from rcdsim.domain.bounds import (
    BoundParams,
    arrival_impact_bound,
    departure_impact_bound,
    pot_bound,
    reg_bound_asymptotic,
    reg_bound_finite,
    replacement_theta,
)
from rcdsim.domain.cost_functions import ReplacementDistribution, batch_value
from rcdsim.domain.events import Trajectory
from rcdsim.domain.models import ExperimentConfig, ReplacementMode
from rcdsim.domain.rcd import RcdConfig, batch_rcd_step
from rcdsim.utils.checkpoints import geometric_checkpoints
from rcdsim.utils.seeding import generator
from rcdsim.worker.trial import TrialResult, run_trials, trace_trial

logger = get_logger(__name__)

FLAG_SIGMAS = 3.0
IMPACT_SIGMAS = 5.0

EMPIRICAL_SERIES = ("reg_avg", "ben_avg", "pot_avg", "c")


@dataclass(frozen=True)
class BoundFlag:
    """A checkpoint where mean > bound + 3 stderr."""

    checkpoint_t: int
    series: str
    mean: float
    stderr: float
    bound: float


@dataclass
class SeriesStats:
    mean: np.ndarray
    stderr: np.ndarray


@dataclass
class AggregateResult:
    """Trial means at every checkpoint plus the matching bound curves."""

    config: ExperimentConfig
    checkpoints: np.ndarray
    trial_count: int
    series: dict[str, SeriesStats]
    totals: dict[str, np.ndarray]
    bounds: dict[str, np.ndarray]
    mean_c0: float
    mean_replacements: float
    flags: list[BoundFlag] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


def _mean_and_stderr(rows: np.ndarray) -> SeriesStats:
    trials = rows.shape[0]
    mean = rows.mean(axis=0)
    if trials < 2:
        return SeriesStats(mean, np.zeros_like(mean))
    return SeriesStats(mean, rows.std(axis=0, ddof=1) / math.sqrt(trials))


def reduce_trials(
    cfg: ExperimentConfig, checkpoints: list[int], results: list[TrialResult]
) -> AggregateResult:
    """Reduce per-trial checkpoint totals (in trial order) into an AggregateResult."""
    grid = np.array(checkpoints, dtype=float)
    reg = np.vstack([r.reg for r in results])
    ben = np.vstack([r.ben for r in results])
    pot = np.vstack([r.pot for r in results])
    c = np.vstack([r.c for r in results])

    series = {
        "reg_avg": _mean_and_stderr(reg / grid),
        "ben_avg": _mean_and_stderr(ben / grid),
        "pot_avg": _mean_and_stderr(pot / grid),
        "c": _mean_and_stderr(c),
    }
    totals = {"reg": reg.mean(axis=0), "ben": ben.mean(axis=0), "pot": pot.mean(axis=0)}
    mean_c0 = float(np.mean([r.c0 for r in results]))

    result = AggregateResult(
        config=cfg,
        checkpoints=np.array(checkpoints, dtype=np.int64),
        trial_count=len(results),
        series=series,
        totals=totals,
        bounds=bound_curves(BoundParams.from_config(cfg, c0=mean_c0), checkpoints),
        mean_c0=mean_c0,
        mean_replacements=float(np.mean([r.replacement_count for r in results])),
    )
    result.flags = check_bounds(result)
    return result


def bound_curves(params: BoundParams, checkpoints: list[int]) -> dict[str, np.ndarray]:
    """Per-step-averaged bounds at each checkpoint."""
    grid = np.array(checkpoints, dtype=float)
    general, quad = params.theta_general, params.theta_quad
    return {
        "bound_pot_avg": np.array([pot_bound(params, T) / T for T in checkpoints]),
        "bound_reg_finite_general_avg": np.array(
            [reg_bound_finite(params, T, general) / T for T in checkpoints]
        ),
        "bound_reg_finite_quad_avg": np.array(
            [reg_bound_finite(params, T, quad) / T for T in checkpoints]
        ),
        "bound_reg_asymptotic_general": np.full_like(
            grid, reg_bound_asymptotic(params, quadratic=False)
        ),
        "bound_reg_asymptotic_quad": np.full_like(
            grid, reg_bound_asymptotic(params, quadratic=True)
        ),
    }


def _regret_bound_series(mode: ReplacementMode) -> str:
    if mode is ReplacementMode.QUADRATIC:
        return "bound_reg_finite_quad_avg"
    return "bound_reg_finite_general_avg"


def check_bounds(result: AggregateResult) -> list[BoundFlag]:
    """Compare every empirical mean with its bound; log and return the violations."""
    pairs = {
        "pot_avg": "bound_pot_avg",
        "ben_avg": "bound_pot_avg",
        "reg_avg": _regret_bound_series(result.config.mode),
    }
    flags: list[BoundFlag] = []
    for series_name, bound_name in pairs.items():
        stats = result.series[series_name]
        bound = result.bounds[bound_name]
        for k, T in enumerate(result.checkpoints.tolist()):
            mean, stderr = float(stats.mean[k]), float(stats.stderr[k])
            logger.debug(
                "T=%d %s: mean=%.6e stderr=%.3e bound=%.6e",
                T, series_name, mean, stderr, bound[k],
            )
            if mean > bound[k] + FLAG_SIGMAS * stderr + 1e-12 * max(1.0, abs(bound[k])):
                flags.append(BoundFlag(T, series_name, mean, stderr, float(bound[k])))
                logger.warning(
                    "Bound violation at T=%d: %s mean=%.6e (stderr %.3e) > %s=%.6e",
                    T, series_name, mean, stderr, bound_name, bound[k],
                )
    return flags


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> AggregateResult:
    """
    Run ``cfg.trials`` seeded trajectories and aggregate them.

    Deterministic given (master seed, trial count), whatever ``workers`` is.
    """
    checkpoints = geometric_checkpoints(cfg.t, settings.checkpoint_base)
    logger.info(
        "Running experiment: n=%d kappa=%.4g p=%.6g T=%d trials=%d mode=%s",
        cfg.n, cfg.class_params.kappa, cfg.update_probability, cfg.t, cfg.trials, cfg.mode.value,
    )
    results = run_trials(cfg, checkpoints, workers)
    result = reduce_trials(cfg, checkpoints, results)

    reg, ben, pot = (result.series[name].mean[-1] for name in ("reg_avg", "ben_avg", "pot_avg"))
    logger.info(
        "Experiment done: Reg_T/T=%.6e Ben_T/T=%.6e Pot_T/T=%.6e flags=%d",
        reg, ben, pot, len(result.flags),
    )
    return result


def single_realization_trace(cfg: ExperimentConfig) -> Trajectory:
    """Per-step (f_est, f_opt, f_selfish) trace of the first trial's seed."""
    logger.info("Tracing one realization: T=%d p=%.6g", cfg.t, cfg.update_probability)
    trajectory = trace_trial(cfg, trial_index=0)
    logger.info(
        "Trace done: %d replacements over %d events", trajectory.replacement_count, cfg.t
    )
    return trajectory


@dataclass(frozen=True)
class ImpactStudy:
    """Empirical E[delta f | replacement] against its bounds."""

    samples: int
    quadratic: bool
    warmup: int
    mean: float
    stderr: float
    theta: float
    theta_general: float
    departure_mean: float
    departure_stderr: float
    departure_bound: float
    arrival_mean: float
    arrival_stderr: float
    arrival_bound: float

    @property
    def within_bound(self) -> bool:
        return self.mean <= self.theta + IMPACT_SIGMAS * self.stderr


def warmup_length(cfg: ExperimentConfig) -> int:
    """10 kappa (n - 1) closed-system updates."""
    return int(math.ceil(10.0 * cfg.class_params.kappa * (cfg.n - 1)))


def replacement_impact_study(
    cfg: ExperimentConfig, samples: Optional[int] = None
) -> ImpactStudy:
    """
    Measure the cost change of one replacement from warmed-up states.

    ``samples`` independent chains start at 1_n with functions from the
    replacement law, run ``warmup_length`` closed-system updates (all
    chains advanced together), then undergo one replacement each.
    """
    samples = samples or cfg.samples
    n = cfg.n
    params = cfg.class_params
    rng = generator(cfg.seed)
    dist = ReplacementDistribution(cfg.mode, params, rng)
    rcd = RcdConfig(params=params, step=cfg.step)
    warmup = warmup_length(cfg)
    logger.info(
        "Replacement impact study: %d samples, warm-up %d updates, mode=%s",
        samples, warmup, cfg.mode.value,
    )

    arrays = dist.sample_arrays((samples, n))
    X = np.ones((samples, n))
    for _ in range(warmup):
        first = rng.integers(n, size=samples)
        second = (first + rng.integers(1, n, size=samples)) % n
        batch_rcd_step(X, arrays, first, second, rcd)

    residual = float(np.max(np.abs(X.sum(axis=1) - n)))
    if residual > 1e-9 * n or np.any(X < 0):
        raise InfeasibleStateError("warm-up chains left S_n", residual)

    rows = np.arange(samples)
    leaving = rng.integers(n, size=samples)
    incoming = dist.sample_arrays(samples)

    before = batch_value(arrays, X).sum(axis=1)
    moved = X + (X[rows, leaving][:, np.newaxis] - X) / n
    after = batch_value(arrays, moved)
    departure = after.sum(axis=1) - after[rows, leaving] - before
    arrival = batch_value(incoming, np.ones(samples))
    total = departure + arrival

    quadratic = cfg.mode.is_quadratic
    bound_params = BoundParams.from_config(cfg)
    scale = math.sqrt(samples)
    study = ImpactStudy(
        samples=samples,
        quadratic=quadratic,
        warmup=warmup,
        mean=float(total.mean()),
        stderr=float(total.std(ddof=1) / scale) if samples > 1 else 0.0,
        theta=replacement_theta(bound_params, quadratic),
        theta_general=bound_params.theta_general,
        departure_mean=float(departure.mean()),
        departure_stderr=float(departure.std(ddof=1) / scale) if samples > 1 else 0.0,
        departure_bound=departure_impact_bound(bound_params, quadratic),
        arrival_mean=float(arrival.mean()),
        arrival_stderr=float(arrival.std(ddof=1) / scale) if samples > 1 else 0.0,
        arrival_bound=arrival_impact_bound(bound_params),
    )
    if study.within_bound:
        logger.info("Replacement impact %.6e <= theta %.6e", study.mean, study.theta)
    else:
        logger.warning(
            "Replacement impact %.6e (stderr %.3e) exceeds theta %.6e",
            study.mean, study.stderr, study.theta,
        )
    return study
