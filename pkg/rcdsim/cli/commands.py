"""
Command-line front end.

Subcommands:
  - run:      Monte Carlo experiment, aggregate CSVs and manifest
  - trace:    one recorded realization, per-step CSV and manifest
  - bounds:   table of every closed-form bound
  - impact:   replacement impact study, one-row CSV and manifest
  - selftest: numerical self-checks

Exit codes: 0 success, 1 configuration error, 2 statistical flag (an
empirical mean above its bound beyond the allowed standard errors).
"""

import argparse
import sys
from typing import Any, Optional, Sequence

from rcdsim import __version__
from rcdsim.cli.schemas import EXCLUSIVE_PAIRS, CliConfig, Subcommand
from rcdsim.core.exceptions import ConfigError, RcdSimError
from rcdsim.core.logging import get_logger, setup_logging
from rcdsim.domain.bounds import BoundParams, bound_table, worst_case_c0
from rcdsim.domain.harness import replacement_impact_study, run_experiment, single_realization_trace
from rcdsim.domain.models import ExperimentConfig, ReplacementMode, StepRule
from rcdsim.domain.rcd import contraction_factor
from rcdsim.domain.selftest import run_selftest
from rcdsim.infrastructure.storage import ResultsRepository

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FLAGGED = 2

# Parameters the self-test falls back to (the reference experiment)
SELFTEST_DEFAULTS = {"kappa": 10.0, "rho_r": 0.0125}

# (flag, type, help); dest is the normalized experiment key
EXPERIMENT_FLAGS: tuple[tuple[str, type, str], ...] = (
    ("--n", int, "population size"),
    ("--alpha", float, "strong-convexity modulus (default 1)"),
    ("--beta", float, "smoothness modulus (exclusive with --kappa)"),
    ("--kappa", float, "condition number beta/alpha (exclusive with --beta)"),
    ("--p", float, "update probability (exclusive with --rho-r)"),
    ("--rho-r", float, "replacement odds (1-p)/p (exclusive with --p)"),
    ("--t", int, "horizon in events"),
    ("--trials", int, "independent trajectories"),
    ("--seed", int, "master seed"),
    ("--samples", int, "replacements measured by 'impact'"),
    ("--out", str, "output directory"),
)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports errors as ConfigError instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError("arguments", message)


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", dest="config_path", help="flat key=value config file")
    common.add_argument("--workers", type=int, help="worker processes for trials")
    for flag, kind, text in EXPERIMENT_FLAGS:
        dest = flag.lstrip("-").replace("-", "_")
        common.add_argument(flag, dest=dest, type=kind, default=argparse.SUPPRESS, help=text)
    common.add_argument(
        "--mode",
        choices=[m.value for m in ReplacementMode],
        default=argparse.SUPPRESS,
        help="replacement law",
    )
    common.add_argument(
        "--step",
        choices=[s.value for s in StepRule],
        default=argparse.SUPPRESS,
        help="RCD step rule",
    )

    parser = CliParser(prog="rcdsim", description="RCD in open multi-agent systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for command in Subcommand:
        subparsers.add_parser(command.value, parents=[common])
    return parser


def parse_cli(argv: Sequence[str]) -> CliConfig:
    """
    Raises:
        ConfigError: Unknown flag, bad value or conflicting flags.
    """
    namespace = vars(build_parser().parse_args(list(argv)))
    subcommand = namespace.pop("subcommand")
    config_path = namespace.pop("config_path", None)
    workers = namespace.pop("workers", None)
    overrides: dict[str, Any] = namespace

    for key, other in EXCLUSIVE_PAIRS.items():
        if key < other and key in overrides and other in overrides:
            raise ConfigError(
                key,
                f"--{key.replace('_', '-')} and --{other.replace('_', '-')} are mutually exclusive",
            )
    if workers is not None and workers < 1:
        raise ConfigError("workers", f"must be at least 1, got {workers}")

    return CliConfig(
        subcommand=Subcommand(subcommand),
        config_path=config_path,
        overrides=overrides,
        workers=workers,
    )


# ── Subcommands ──────────────────────────────────────────────


def _repository(cfg: ExperimentConfig) -> ResultsRepository:
    return ResultsRepository(cfg.out)


def _run(cli: CliConfig, cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg, workers=cli.workers)
    repo = _repository(cfg)
    repo.write_aggregate(result, "run")
    repo.write_manifest(cfg, "run", command=cli.subcommand.value)
    if result.flagged:
        logger.warning("%d bound violation(s) flagged", len(result.flags))
        return EXIT_FLAGGED
    return EXIT_OK


def _trace(cli: CliConfig, cfg: ExperimentConfig) -> int:
    trajectory = single_realization_trace(cfg)
    repo = _repository(cfg)
    repo.write_trajectory(trajectory, "trace")
    repo.write_manifest(cfg, "trace", command=cli.subcommand.value)
    return EXIT_OK


def _bounds(cli: CliConfig, cfg: ExperimentConfig) -> int:
    params = BoundParams.from_config(cfg)
    # C0 is unknown without a run; finite totals use its worst case
    params = params.model_copy(update={"c0": worst_case_c0(params)})
    table = {"gamma": contraction_factor(params), **bound_table(params, T=cfg.t)}
    width = max(len(name) for name in table)
    for name, value in table.items():
        print(f"{name:<{width}}  {value:.17e}")
    return EXIT_OK


def _impact(cli: CliConfig, cfg: ExperimentConfig) -> int:
    study = replacement_impact_study(cfg)
    repo = _repository(cfg)
    repo.write_impact(study, "impact")
    repo.write_manifest(cfg, "impact", command=cli.subcommand.value)
    return EXIT_OK if study.within_bound else EXIT_FLAGGED


def _selftest(cli: CliConfig, cfg: ExperimentConfig) -> int:
    results = run_selftest(cfg)
    for result in results:
        print(f"{'ok    ' if result.passed else 'FAILED'}  {result.name}: {result.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONFIG


HANDLERS = {
    Subcommand.RUN: _run,
    Subcommand.TRACE: _trace,
    Subcommand.BOUNDS: _bounds,
    Subcommand.IMPACT: _impact,
    Subcommand.SELFTEST: _selftest,
}


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return the process exit code."""
    setup_logging()
    try:
        cli = parse_cli(sys.argv[1:] if argv is None else argv)
        defaults = SELFTEST_DEFAULTS if cli.subcommand is Subcommand.SELFTEST else None
        cfg = cli.resolve(defaults)
    except ConfigError as exc:
        logger.error("%s", exc.message)
        return EXIT_CONFIG
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)

    logger.info("rcdsim %s: %s", __version__, cli.subcommand.value)
    try:
        return HANDLERS[cli.subcommand](cli, cfg)
    except ConfigError as exc:
        logger.error("%s", exc.message)
        return EXIT_CONFIG
    except RcdSimError as exc:
        logger.error("%s failed: %s", cli.subcommand.value, exc.message)
        return EXIT_CONFIG
