"""
Domain models — validated parameter records shared across all layers.

These models have no dependency on the simulation code and represent
the inputs of every computation: the admissible function class, the
replacement law, the RCD step rule and a full Monte Carlo experiment.
"""

from enum import Enum
from typing import Any, Mapping, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from rcdsim.core.exceptions import ClassParamsError, ConfigError


class ReplacementMode(str, Enum):
    """Law of the cost function carried by an incoming agent."""

    RR = "rr"
    AR = "ar"
    QUADRATIC = "quadratic"

    @property
    def is_quadratic(self) -> bool:
        """True when every sampled function is of the form phi * x^2."""
        return self is not ReplacementMode.RR


class StepRule(str, Enum):
    """RCD step size: 1/(2 beta) (certified) or 1/beta (ablation only)."""

    TWO_BETA = "two-beta"
    BETA = "beta"


class ClassParams(BaseModel):
    """Curvature bounds of the admissible function class F_{alpha,beta}."""

    alpha: float = Field(..., description="Strong-convexity modulus")
    beta: float = Field(..., description="Smoothness modulus")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_order(self) -> "ClassParams":
        if not (self.alpha > 0 and self.beta >= self.alpha):
            raise ClassParamsError(self.alpha, self.beta)
        return self

    @property
    def kappa(self) -> float:
        """Condition number beta / alpha."""
        return self.beta / self.alpha

    @property
    def phi_range(self) -> tuple[float, float]:
        """Admissible quadratic coefficients [alpha/2, beta/2]."""
        return self.alpha / 2.0, self.beta / 2.0


class ExperimentConfig(BaseModel):
    """
    Full description of a Monte Carlo experiment.

    Exactly one of ``p`` / ``rho_r`` and one of ``beta`` / ``kappa`` is
    given; the other member of each pair is derived. Only the given keys
    are stored, so a config written to a manifest re-parses identically.
    """

    n: int = Field(5, ge=2, description="Population size")
    alpha: float = Field(1.0, gt=0, description="Strong-convexity modulus")
    beta: Optional[float] = Field(None, gt=0, description="Smoothness modulus")
    kappa: Optional[float] = Field(None, ge=1, description="Condition number")
    p: Optional[float] = Field(None, gt=0, le=1, description="Update probability")
    rho_r: Optional[float] = Field(None, ge=0, description="Replacement odds (1-p)/p")
    t: int = Field(10_000, ge=1, description="Horizon in events")
    trials: int = Field(1, ge=1, description="Independent trajectories")
    seed: int = Field(0, ge=0, description="Master seed")
    mode: ReplacementMode = Field(ReplacementMode.AR, description="Replacement law")
    step: StepRule = Field(StepRule.TWO_BETA, description="RCD step rule")
    samples: int = Field(10_000, ge=1, description="Replacements measured by the impact study")
    out: Optional[str] = Field(None, description="Output directory override")

    model_config = {"frozen": True, "extra": "forbid"}

    @model_validator(mode="after")
    def _check_exclusive_pairs(self) -> "ExperimentConfig":
        if (self.p is None) == (self.rho_r is None):
            raise ConfigError("p", "exactly one of 'p' and 'rho_r' must be given")
        if (self.beta is None) == (self.kappa is None):
            raise ConfigError("kappa", "exactly one of 'beta' and 'kappa' must be given")
        if self.beta is not None and self.beta < self.alpha:
            raise ConfigError("beta", f"beta={self.beta} is below alpha={self.alpha}")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build a config from loosely typed key/value pairs.

        Pydantic validation failures are re-raised as ``ConfigError``
        naming the first offending field.
        """
        try:
            return cls(**dict(values))
        except ValidationError as exc:
            first = exc.errors()[0]
            field = ".".join(str(part) for part in first.get("loc", ())) or "config"
            raise ConfigError(field, first.get("msg", "invalid value")) from exc

    @property
    def update_probability(self) -> float:
        """Resolved p."""
        if self.p is not None:
            return self.p
        return 1.0 / (1.0 + self.rho_r)

    @property
    def replacement_odds(self) -> float:
        """Resolved rho_R = (1 - p) / p."""
        if self.rho_r is not None:
            return self.rho_r
        return (1.0 - self.p) / self.p

    @property
    def class_params(self) -> ClassParams:
        """Resolved (alpha, beta)."""
        beta = self.beta if self.beta is not None else self.kappa * self.alpha
        return ClassParams(alpha=self.alpha, beta=beta)

    def given_values(self) -> dict[str, Any]:
        """Keys explicitly carried by this config, as plain values."""
        dumped = self.model_dump(mode="json", exclude_none=True)
        return dumped
