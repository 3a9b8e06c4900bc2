"""
Self-checks of the numerical building blocks.

Run by ``rcdsim selftest`` before trusting a long experiment:

  - sampled functions of every replacement law satisfy the class certificates;
  - the KKT optimum agrees with the projected-gradient oracle;
  - one update contracts the expected suboptimality by at least gamma;
  - the closed-form regret bound agrees with its loop evaluation.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from rcdsim.core.logging import get_logger
from rcdsim.domain.allocation import AllocationState, optimal_point, projected_gradient_point
from rcdsim.domain.bounds import (
    BoundParams,
    reg_bound_asymptotic,
    reg_bound_finite,
    reg_bound_finite_direct,
    reg_bound_from_rate,
)
from rcdsim.domain.cost_functions import CostFunction, ReplacementDistribution, verify_class
from rcdsim.domain.models import ClassParams, ExperimentConfig, ReplacementMode
from rcdsim.domain.rcd import (
    RcdConfig,
    contraction_factor,
    mean_pairwise_suboptimality,
    suboptimality,
)
from rcdsim.utils.seeding import generator

logger = get_logger(__name__)

ORACLE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_feasible_state(
    n: int, dist: ReplacementDistribution, rng: np.random.Generator
) -> AllocationState:
    """Functions from ``dist``, estimates uniform on S_n."""
    return AllocationState(n * rng.dirichlet(np.ones(n)), dist.sample_many(n))


def check_function_class(params: ClassParams, rng: np.random.Generator, samples: int = 200) -> CheckResult:
    failures = 0
    for mode in ReplacementMode:
        dist = ReplacementDistribution(mode, params, rng)
        failures += sum(not verify_class(f) for f in dist.sample_many(samples))
    return CheckResult(
        "function_class",
        failures == 0,
        f"{failures} of {samples * len(ReplacementMode)} sampled functions failed",
    )


def check_oracle(params: ClassParams, rng: np.random.Generator, instances: int = 20) -> CheckResult:
    worst = 0.0
    for k in range(instances):
        mode = (ReplacementMode.RR, ReplacementMode.AR)[k % 2]
        n = int(rng.integers(2, 7))
        state = random_feasible_state(n, ReplacementDistribution(mode, params, rng), rng)
        gap = np.max(np.abs(optimal_point(state).x - projected_gradient_point(state).x))
        worst = max(worst, float(gap))

    # n = 2 with phi = (alpha/2, beta/2) has x* = 2 (beta, alpha) / (alpha + beta)
    low, high = params.phi_range
    pair = AllocationState(
        np.ones(2), [CostFunction.quadratic(low, params), CostFunction.quadratic(high, params)]
    )
    expected = 2.0 * np.array([params.beta, params.alpha]) / (params.alpha + params.beta)
    analytic = float(np.max(np.abs(optimal_point(pair).x - expected)))

    passed = worst <= ORACLE_TOLERANCE and analytic <= 1e-10
    return CheckResult(
        "oracle_equivalence",
        passed,
        f"max |x_bisect - x_oracle| = {worst:.3e} over {instances} instances, "
        f"analytic n=2 error = {analytic:.3e}",
    )


def check_contraction(params: ClassParams, rng: np.random.Generator, states: int = 20) -> CheckResult:
    rcd = RcdConfig(params=params)
    dist = ReplacementDistribution(ReplacementMode.RR, params, rng)
    worst_excess = -math.inf
    for k in range(states):
        n = 3 + k % 3
        state = random_feasible_state(n, dist, rng)
        opt = optimal_point(state)
        gamma = contraction_factor(
            BoundParams(n=n, alpha=params.alpha, beta=params.beta, p=1.0)
        )
        excess = mean_pairwise_suboptimality(state, opt, rcd) - gamma * suboptimality(state, opt)
        worst_excess = max(worst_excess, excess)
    return CheckResult(
        "pairwise_contraction",
        worst_excess <= 1e-9,
        f"max (E[C+] - gamma C) = {worst_excess:.3e} over {states} states",
    )


def check_bound_evaluators(bound_params: BoundParams, horizon: int = 1000) -> CheckResult:
    worst = 0.0
    for theta in (bound_params.theta_general, bound_params.theta_quad):
        closed = reg_bound_finite(bound_params, horizon, theta)
        direct = reg_bound_finite_direct(bound_params, horizon, theta)
        worst = max(worst, abs(closed - direct) / max(abs(direct), 1e-300))

    gamma = contraction_factor(bound_params)
    rate = reg_bound_from_rate(bound_params.rho_r, bound_params.theta_general, gamma)
    asymptotic = reg_bound_asymptotic(bound_params, quadratic=False)
    identity = abs(rate - asymptotic) / max(abs(asymptotic), 1e-300)

    return CheckResult(
        "bound_evaluators",
        worst <= 1e-9 and identity <= 1e-12,
        f"closed vs loop rel. error = {worst:.3e}, rate identity rel. error = {identity:.3e}",
    )


def run_selftest(cfg: ExperimentConfig) -> list[CheckResult]:
    """Run every check with the class, rates and seed of ``cfg``."""
    params = cfg.class_params
    rng = generator(cfg.seed)
    bound_params = BoundParams.from_config(cfg, c0=1.0)

    checks: list[Callable[[], CheckResult]] = [
        lambda: check_function_class(params, rng),
        lambda: check_oracle(params, rng),
        lambda: check_contraction(params, rng),
        lambda: check_bound_evaluators(bound_params),
    ]
    results = []
    for check in checks:
        result = check()
        log = logger.info if result.passed else logger.error
        log("Self-test %s: %s (%s)", result.name, "ok" if result.passed else "FAILED", result.detail)
        results.append(result)
    return results
