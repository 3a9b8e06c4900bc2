"""
Process configuration using Pydantic Settings.

Runtime knobs (logging, pool size, solver tolerances, output location)
are read from environment variables prefixed ``RCDSIM_`` or a local
``.env`` file. Experiment parameters are not settings; they live in
``rcdsim.domain.models.ExperimentConfig``.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Central process configuration."""

    # Logging
    log_level: str = Field(
        default="INFO",
        description="Log level (DEBUG, INFO, WARNING, ERROR)",
    )

    # Trial pool
    workers: int = Field(
        default=1,
        ge=1,
        description="Number of worker processes running Monte Carlo trials",
    )

    # Output
    output_dir: str = Field(
        default="results",
        description="Directory receiving CSV dumps and manifests",
    )

    # Optimum solver
    bisection_tol_factor: float = Field(
        default=1e-10,
        gt=0,
        description="Constraint residual tolerance of the optimum solver, per agent",
    )
    bisection_max_iter: int = Field(
        default=200,
        ge=1,
        description="Iteration cap of the bisection fallback of the optimum solver",
    )
    oracle_max_iter: int = Field(
        default=1_000_000,
        ge=1,
        description="Iteration cap of the projected-gradient oracle",
    )

    # Function-class verification
    verify_grid_size: int = Field(
        default=257,
        ge=3,
        description="Grid points used by verify_class",
    )
    verify_extent: float = Field(
        default=10.0,
        gt=0,
        description="Right end of the verify_class grid",
    )

    # Experiments
    checkpoint_base: int = Field(
        default=2,
        ge=2,
        description="Ratio of the geometric checkpoint grid",
    )

    model_config = SettingsConfigDict(
        env_prefix="RCDSIM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Singleton: import this throughout the package
settings = Settings()
