"""
Pairwise Random Coordinate Descent.

When agents i and j interact they exchange resource in proportion to
their marginal-cost difference:

    g    = f_i'(x_i) - f_j'(x_j)
    x_i <- x_i - h g
    x_j <- x_j + h g

The transfer is symmetric, so sum(x) is preserved. With h = 1/(2 beta)
each updated coordinate keeps at least half its value; that step is
the certified default, 1/beta is selectable for ablation.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from rcdsim.core.exceptions import AgentIndexError, BoundDomainError, MismatchedFunctionsError
from rcdsim.core.logging import get_logger
from rcdsim.domain.allocation import AllocationState, StrategyPoint, global_cost
from rcdsim.domain.bounds import BoundParams
from rcdsim.domain.cost_functions import FunctionArrays, batch_grad
from rcdsim.domain.models import ClassParams, StepRule

logger = get_logger(__name__)


@dataclass(frozen=True)
class RcdConfig:
    """Step rule plus the class it is computed from."""

    params: ClassParams
    step: StepRule = StepRule.TWO_BETA

    @property
    def step_size(self) -> float:
        if self.step is StepRule.BETA:
            return 1.0 / self.params.beta
        return 1.0 / (2.0 * self.params.beta)


def _check_pair(s: AllocationState, i: int, j: int) -> None:
    s.check_index(i)
    s.check_index(j)
    if i == j:
        raise AgentIndexError(i, s.n, "an update needs two distinct agents")


def apply_rcd_update(s: AllocationState, i: int, j: int, cfg: RcdConfig) -> float:
    """
    Update agents i and j in place.

    Returns:
        The incremental cost change f_i(x_i+) + f_j(x_j+) - f_i(x_i) - f_j(x_j).
    """
    _check_pair(s, i, j)
    return pair_step(s, i, j, cfg.step_size)


def pair_step(s: AllocationState, i: int, j: int, step_size: float) -> float:
    """Unchecked in-place update of a valid pair; same return as apply_rcd_update."""
    x = s.x
    f_i, f_j = s.funcs[i], s.funcs[j]
    x_i, x_j = float(x[i]), float(x[j])

    transfer = step_size * (f_i.derivative(x_i) - f_j.derivative(x_j))
    new_i = x_i - transfer
    new_j = x_j + transfer

    delta = (f_i.value(new_i) - f_i.value(x_i)) + (f_j.value(new_j) - f_j.value(x_j))
    x[i] = new_i
    x[j] = new_j
    return delta


def rcd_update(s: AllocationState, i: int, j: int, cfg: RcdConfig) -> AllocationState:
    """Pure variant: validate ``s`` and return an updated copy."""
    s.check_feasible()
    updated = s.copy()
    apply_rcd_update(updated, i, j, cfg)
    return updated


def suboptimality(s: AllocationState, opt: StrategyPoint) -> float:
    """
    C_t = f^t(x^t) - f^t(x*^t), clamped at 0.

    Raises:
        MismatchedFunctionsError: ``opt`` was solved for other functions.
    """
    if opt.functions != tuple(s.funcs):
        raise MismatchedFunctionsError()
    gap = global_cost(s) - opt.value
    if gap < -1e-9 * max(1.0, abs(opt.value)):
        logger.warning("Estimate beats the optimum by %.3e; solver tolerance too loose?", -gap)
    return max(gap, 0.0)


def contraction_factor(params: BoundParams) -> float:
    """gamma = 1 - 1 / (kappa (n - 1)), the expected per-update contraction."""
    if params.n < 2:
        raise BoundDomainError("contraction_factor", f"needs n >= 2, got n={params.n}")
    return 1.0 - 1.0 / (params.kappa * (params.n - 1))


def mean_pairwise_suboptimality(s: AllocationState, opt: StrategyPoint, cfg: RcdConfig) -> float:
    """
    Average suboptimality after one update, exhaustively over all
    n(n-1)/2 unordered pairs (the exact conditional expectation).
    """
    pairs = list(combinations(range(s.n), 2))
    total = 0.0
    for i, j in pairs:
        trial = s.copy()
        apply_rcd_update(trial, i, j, cfg)
        total += suboptimality(trial, opt)
    return total / len(pairs)


def _take(arrays: FunctionArrays, rows: np.ndarray, cols: np.ndarray) -> FunctionArrays:
    return FunctionArrays(
        arrays.phi1[rows, cols], arrays.phi2[rows, cols], arrays.breakpoint[rows, cols]
    )


def batch_rcd_step(
    X: np.ndarray,
    arrays: FunctionArrays,
    I: np.ndarray,
    J: np.ndarray,
    cfg: RcdConfig,
) -> None:
    """
    Apply one update per row of ``X`` in place.

    ``X`` and the parameter arrays have shape (chains, n); row r updates
    the pair (I[r], J[r]).
    """
    rows = np.arange(X.shape[0])
    x_i = X[rows, I]
    x_j = X[rows, J]
    g = batch_grad(_take(arrays, rows, I), x_i) - batch_grad(_take(arrays, rows, J), x_j)
    transfer = cfg.step_size * g
    X[rows, I] = x_i - transfer
    X[rows, J] = x_j + transfer
