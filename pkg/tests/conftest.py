"""
Shared test fixtures for the rcdsim test suite.

Provides:
  - The reference function class (alpha=1, beta=10)
  - The two-agent quadratic instance phi=(0.5, 5) with known optimum (20/11, 2/11)
  - Seeded generators and replacement laws
"""

import numpy as np
import pytest

from rcdsim.domain.allocation import AllocationState
from rcdsim.domain.bounds import BoundParams
from rcdsim.domain.cost_functions import CostFunction, ReplacementDistribution
from rcdsim.domain.models import ClassParams, ReplacementMode
from rcdsim.domain.rcd import RcdConfig


@pytest.fixture
def class_params() -> ClassParams:
    """alpha = 1, beta = 10 (kappa = 10)."""
    return ClassParams(alpha=1.0, beta=10.0)


@pytest.fixture
def rcd_config(class_params: ClassParams) -> RcdConfig:
    return RcdConfig(params=class_params)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def two_agent_state(class_params: ClassParams) -> AllocationState:
    """Selfish start of the n=2 instance f = (0.5 x^2, 5 x^2)."""
    return AllocationState(
        [1.0, 1.0],
        [
            CostFunction.quadratic(0.5, class_params),
            CostFunction.quadratic(5.0, class_params),
        ],
    )


@pytest.fixture
def rr_distribution(class_params: ClassParams, rng: np.random.Generator) -> ReplacementDistribution:
    return ReplacementDistribution(ReplacementMode.RR, class_params, rng)


@pytest.fixture
def ar_distribution(class_params: ClassParams, rng: np.random.Generator) -> ReplacementDistribution:
    return ReplacementDistribution(ReplacementMode.AR, class_params, rng)


@pytest.fixture
def reference_bounds() -> BoundParams:
    """n=5, alpha=1, beta=10, rho_R=0.0125."""
    return BoundParams(n=5, alpha=1.0, beta=10.0, rho_r=0.0125)
