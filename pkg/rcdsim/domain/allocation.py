"""
Allocation state on the feasible set S_n and its three reference strategies.

S_n = {x >= 0 : sum(x) = n}. The state holds one estimate and one cost
function per agent slot. Strategies:

  - Estimate: whatever the RCD iterate currently is;
  - Selfish:  x = 1_n (every agent keeps its own demand);
  - Optimal:  argmin_{x in S_n} sum f_i(x_i), solved through the KKT
              conditions x_i = (f_i')^{-1}(lambda); lambda is found exactly on
              the piecewise-linear multiplier curve, with bisection on
              [alpha, beta] as fallback.

A projected-gradient solver is kept as an independent brute-force oracle.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from rcdsim.core.config import settings
from rcdsim.core.exceptions import (
    AgentIndexError,
    BracketFailureError,
    InfeasibleStateError,
)
from rcdsim.core.logging import get_logger
from rcdsim.domain.cost_functions import (
    CostFunction,
    FunctionArrays,
    ReplacementDistribution,
    batch_grad,
    batch_grad_inverse,
    batch_value,
)
from rcdsim.domain.models import ClassParams
from rcdsim.utils.simplex import project_simplex

logger = get_logger(__name__)

FEASIBILITY_RTOL = 1e-9


class AllocationState:
    """
    Mutable allocation: estimates ``x`` and the slot functions ``funcs``.

    Only the single-threaded trajectory loop mutates a state; use
    ``copy()`` for snapshots shared with metric evaluation.
    """

    def __init__(self, x: Sequence[float] | np.ndarray, funcs: Sequence[CostFunction]) -> None:
        self.x = np.array(x, dtype=float)
        self.funcs = list(funcs)
        if self.x.ndim != 1 or len(self.funcs) != self.x.shape[0]:
            raise InfeasibleStateError(
                f"{self.x.shape[0] if self.x.ndim == 1 else self.x.shape} estimates "
                f"for {len(self.funcs)} functions"
            )
        self._arrays: Optional[FunctionArrays] = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def arrays(self) -> FunctionArrays:
        """Vectorized view of the slot functions (cached, patched on replacement)."""
        if self._arrays is None:
            self._arrays = FunctionArrays.from_functions(self.funcs)
        return self._arrays

    def replace_function(self, slot: int, incoming: CostFunction) -> None:
        self.check_index(slot)
        self.funcs[slot] = incoming
        if self._arrays is not None:
            # copies share the cached arrays, so write to fresh ones
            phi1 = self._arrays.phi1.copy()
            phi2 = self._arrays.phi2.copy()
            breakpoint = self._arrays.breakpoint.copy()
            phi1[slot], phi2[slot], breakpoint[slot] = incoming.phi1, incoming.phi2, incoming.breakpoint
            self._arrays = FunctionArrays(phi1=phi1, phi2=phi2, breakpoint=breakpoint)

    def check_index(self, index: int) -> None:
        if not 0 <= index < self.n:
            raise AgentIndexError(index, self.n)

    def check_feasible(self) -> None:
        """Raise InfeasibleStateError unless x in S_n (within 1e-9 n)."""
        residual = float(np.sum(self.x)) - self.n
        if abs(residual) > FEASIBILITY_RTOL * self.n:
            raise InfeasibleStateError(
                f"sum(x) deviates from n={self.n} by {residual!r}", residual
            )
        if np.any(self.x < 0):
            raise InfeasibleStateError(f"negative estimate {float(self.x.min())!r}")

    def copy(self) -> "AllocationState":
        clone = AllocationState(self.x.copy(), self.funcs)
        clone._arrays = self._arrays
        return clone

    def class_params(self) -> ClassParams:
        """Loosest class covering every slot function."""
        return ClassParams(
            alpha=min(f.params.alpha for f in self.funcs),
            beta=max(f.params.beta for f in self.funcs),
        )


class StrategyKind(str, Enum):
    OPTIMAL = "optimal"
    SELFISH = "selfish"
    ESTIMATE = "estimate"


@dataclass(frozen=True)
class StrategyPoint:
    """A point of S_n together with f^t at that point."""

    kind: StrategyKind
    x: np.ndarray
    value: float
    functions: tuple[CostFunction, ...] = field(repr=False)
    multiplier: Optional[float] = None


def initial_state(n: int, dist: ReplacementDistribution) -> AllocationState:
    """Selfish start x^0 = 1_n with functions drawn from ``dist``."""
    if n < 1:
        raise AgentIndexError(n, n, "population must be positive")
    return AllocationState(np.ones(n), dist.sample_many(n))


def global_cost(s: AllocationState) -> float:
    """f^t(x) = sum_i f_i(x_i) for a feasible state."""
    s.check_feasible()
    return float(np.sum(batch_value(s.arrays, s.x)))


def selfish_point(s: AllocationState) -> StrategyPoint:
    """Every agent at its demand: x = 1_n."""
    x = np.ones(s.n)
    value = float(np.sum(batch_value(s.arrays, x)))
    return StrategyPoint(StrategyKind.SELFISH, x, value, tuple(s.funcs))


def estimate_point(s: AllocationState) -> StrategyPoint:
    """The current iterate as a strategy point."""
    return StrategyPoint(StrategyKind.ESTIMATE, s.x.copy(), global_cost(s), tuple(s.funcs))


def _exact_multiplier(arrays: FunctionArrays, n: int, lo: float, hi: float) -> float:
    """
    Solve sum x_i(lambda) = n on the linear piece that straddles n.

    sum x_i(lambda) is piecewise linear in lambda with kinks at the
    breakpoint gradients 2 phi1_i b_i, so one pass over the sorted kinks
    inside (lo, hi) locates the piece and interpolation is exact on it.
    """
    kinks = 2.0 * arrays.phi1 * arrays.breakpoint
    inner = np.sort(kinks[(kinks > lo) & (kinks < hi)])
    knots = np.concatenate(([lo], inner, [hi]))
    sums = batch_grad_inverse(arrays, knots[:, None]).sum(axis=1)
    k = int(np.clip(np.searchsorted(sums, n), 1, knots.shape[0] - 1))
    a, b = float(knots[k - 1]), float(knots[k])
    s_a, s_b = float(sums[k - 1]), float(sums[k])
    if s_b <= s_a:
        return a
    return a + (n - s_a) * (b - a) / (s_b - s_a)


def _bisect_multiplier(
    allocation: Callable[[float], np.ndarray],
    n: int,
    lo: float,
    hi: float,
    tol: float,
) -> tuple[float, np.ndarray, float]:
    """Bracketed bisection with a closing secant step; returns (lambda, x, residual)."""
    sum_lo = float(np.sum(allocation(lo)))
    sum_hi = float(np.sum(allocation(hi)))
    lam = lo if abs(sum_lo - n) <= abs(sum_hi - n) else hi
    best = allocation(lam)
    residual = abs(float(np.sum(best)) - n)

    for _ in range(settings.bisection_max_iter):
        if residual <= tol:
            break
        mid = 0.5 * (lo + hi)
        x_mid = allocation(mid)
        sum_mid = float(np.sum(x_mid))
        if abs(sum_mid - n) < residual:
            lam, best, residual = mid, x_mid, abs(sum_mid - n)
        if sum_mid < n:
            lo, sum_lo = mid, sum_mid
        else:
            hi, sum_hi = mid, sum_mid

    if sum_hi > sum_lo:
        secant = lo + (n - sum_lo) * (hi - lo) / (sum_hi - sum_lo)
        x_sec = allocation(secant)
        sec_residual = abs(float(np.sum(x_sec)) - n)
        if sec_residual < residual:
            lam, best, residual = secant, x_sec, sec_residual
    return lam, best, residual


def optimal_point(s: AllocationState, tol: float | None = None) -> StrategyPoint:
    """
    Instantaneous optimum x*^t from the KKT conditions.

    x_i(lambda) is nondecreasing and lambda/beta <= x_i(lambda) <= lambda/alpha,
    so sum x_i(lambda) straddles n on [alpha, beta]. The multiplier is
    solved exactly on the linear piece containing n; if rounding leaves a
    constraint residual above ``tol`` (default 1e-10 n) the solver falls
    back to bisection on the same bracket.

    Raises:
        BracketFailureError: a function violates its class certificates.
    """
    n = s.n
    funcs = tuple(s.funcs)
    if n == 1:
        x = np.ones(1)
        return StrategyPoint(
            StrategyKind.OPTIMAL, x, float(np.sum(batch_value(s.arrays, x))), funcs,
            multiplier=funcs[0].derivative(1.0),
        )

    tol = tol if tol is not None else settings.bisection_tol_factor * n
    arrays = s.arrays
    params = s.class_params()
    lo, hi = params.alpha, params.beta

    def allocation(lam: float) -> np.ndarray:
        return batch_grad_inverse(arrays, np.full(n, lam))

    sum_lo = float(np.sum(allocation(lo)))
    sum_hi = float(np.sum(allocation(hi)))
    slack = 1e-12 * n
    if sum_lo > n + slack or sum_hi < n - slack:
        raise BracketFailureError(sum_lo, sum_hi, n)

    lam = _exact_multiplier(arrays, n, lo, hi)
    best = allocation(lam)
    residual = abs(float(np.sum(best)) - n)
    if residual > tol:
        logger.debug("Exact multiplier left residual %.3e; bisecting", residual)
        lam, best, residual = _bisect_multiplier(allocation, n, lo, hi, tol)
        if residual > tol:
            logger.warning("Dual bisection stopped with residual %.3e > tol %.3e", residual, tol)

    value = float(np.sum(batch_value(arrays, best)))
    return StrategyPoint(StrategyKind.OPTIMAL, best, value, funcs, multiplier=lam)


def projected_gradient_point(
    s: AllocationState,
    max_iter: int | None = None,
    tol: float = 1e-13,
) -> StrategyPoint:
    """
    Brute-force optimum: projected gradient on S_n with step 1/beta.

    Independent of the KKT solver; used only to cross-check it.
    """
    n = s.n
    arrays = s.arrays
    step = 1.0 / s.class_params().beta
    max_iter = max_iter or settings.oracle_max_iter

    x = np.ones(n)
    for iteration in range(max_iter):
        x_next = project_simplex(x - step * batch_grad(arrays, x), n)
        moved = float(np.max(np.abs(x_next - x)))
        x = x_next
        if moved <= tol:
            logger.debug("Projected gradient converged after %d iterations", iteration + 1)
            break

    value = float(np.sum(batch_value(arrays, x)))
    return StrategyPoint(StrategyKind.OPTIMAL, x, value, tuple(s.funcs))


def norm_bounds(n: int) -> tuple[float, float]:
    """Envelope of ||x||^2 over S_n: [n, n^2]."""
    return float(n), float(n * n)


def cost_bounds(n: int, params: ClassParams) -> tuple[float, float]:
    """Envelope of f^t over S_n: [(alpha/2) n, (beta/2) n^2]."""
    return params.alpha * n / 2.0, params.beta * n * n / 2.0
