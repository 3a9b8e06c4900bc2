"""
Command-line schemas.

``CliConfig`` is the validated form of one invocation: which subcommand
to run, an optional config file, and the flags given on the command
line. Resolving it merges file values and flags into an
``ExperimentConfig``.
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field

from rcdsim.domain.models import ExperimentConfig
from rcdsim.infrastructure.storage import load_config_file

# A value for one member of each pair removes the other from lower-priority sources
EXCLUSIVE_PAIRS = {"p": "rho_r", "rho_r": "p", "beta": "kappa", "kappa": "beta"}


class Subcommand(str, Enum):
    RUN = "run"
    TRACE = "trace"
    BOUNDS = "bounds"
    IMPACT = "impact"
    SELFTEST = "selftest"


class CliConfig(BaseModel):
    """One parsed command line."""

    subcommand: Subcommand = Field(..., description="Action to perform")
    config_path: Optional[str] = Field(None, description="Flat key=value config file")
    overrides: dict[str, Any] = Field(
        default_factory=dict, description="Experiment keys given as flags"
    )
    workers: Optional[int] = Field(None, ge=1, description="Trial pool size")

    def merged_values(self, defaults: Optional[dict[str, Any]] = None) -> dict[str, Any]:
        """
        File values, then flags, on top of ``defaults``.

        ``defaults`` only fill an exclusive pair when neither member is
        given anywhere else.
        """
        values: dict[str, Any] = {}
        if self.config_path:
            values.update(load_config_file(self.config_path))
        for key, value in self.overrides.items():
            values.pop(EXCLUSIVE_PAIRS.get(key, ""), None)
            values[key] = value
        for key, value in (defaults or {}).items():
            if key not in values and EXCLUSIVE_PAIRS.get(key) not in values:
                values[key] = value
        return values

    def resolve(self, defaults: Optional[dict[str, Any]] = None) -> ExperimentConfig:
        """
        Raises:
            ConfigError: Unreadable file or invalid merged values.
        """
        return ExperimentConfig.from_mapping(self.merged_values(defaults))
