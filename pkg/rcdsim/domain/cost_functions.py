"""
Local cost functions of the class F_{alpha,beta} (one-dimensional).

Two families are supported:

  - Quadratic{phi}:            f(x) = phi x^2
  - PiecewiseQuadratic{phi1, phi2, b}:
        f(x) = phi1 x^2                                  for x <= b
        f(x) = phi2 (x - b)^2 + 2 phi1 b (x - b) + phi1 b^2   for x > b

Both satisfy f(0) = f'(0) = 0 and have slope in [alpha, beta] whenever
phi, phi1, phi2 lie in [alpha/2, beta/2]. A quadratic is the piecewise
form with phi1 = phi2 and an infinite breakpoint, which is how the
vectorized kernels treat it.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from rcdsim.core.config import settings
from rcdsim.core.exceptions import DomainError, RcdSimError
from rcdsim.core.logging import get_logger
from rcdsim.domain.models import ClassParams, ReplacementMode

logger = get_logger(__name__)


class Family(str, Enum):
    """Tag of a cost function family."""

    QUADRATIC = "quadratic"
    PIECEWISE = "piecewise_quadratic"


@dataclass(frozen=True)
class CostFunction:
    """
    Immutable local cost function with its class certificate.

    ``value``/``derivative``/``derivative_inverse`` skip domain checks and
    are meant for hot loops; the module-level ``evaluate``, ``grad`` and
    ``grad_inverse`` validate their argument.
    """

    family: Family
    phi1: float
    phi2: float
    breakpoint: float
    params: ClassParams

    @classmethod
    def quadratic(cls, phi: float, params: ClassParams) -> "CostFunction":
        if not phi > 0:
            raise RcdSimError(f"Quadratic coefficient must be positive, got {phi!r}")
        return cls(Family.QUADRATIC, float(phi), float(phi), math.inf, params)

    @classmethod
    def piecewise(
        cls, phi1: float, phi2: float, breakpoint: float, params: ClassParams
    ) -> "CostFunction":
        if not (phi1 > 0 and phi2 > 0 and breakpoint > 0):
            raise RcdSimError(
                f"Piecewise quadratic needs positive phi1, phi2, breakpoint; "
                f"got ({phi1!r}, {phi2!r}, {breakpoint!r})"
            )
        return cls(Family.PIECEWISE, float(phi1), float(phi2), float(breakpoint), params)

    @property
    def phi(self) -> float:
        """Coefficient of a quadratic function."""
        if self.family is not Family.QUADRATIC:
            raise RcdSimError("Only quadratic functions have a single coefficient")
        return self.phi1

    def value(self, x: float) -> float:
        if x <= self.breakpoint:
            return self.phi1 * x * x
        v = x - self.breakpoint
        return self.phi1 * self.breakpoint * self.breakpoint + v * (
            self.phi2 * v + 2.0 * self.phi1 * self.breakpoint
        )

    def derivative(self, x: float) -> float:
        if x <= self.breakpoint:
            return 2.0 * self.phi1 * x
        return 2.0 * self.phi1 * self.breakpoint + 2.0 * self.phi2 * (x - self.breakpoint)

    def derivative_inverse(self, g: float) -> float:
        g_b = 2.0 * self.phi1 * self.breakpoint
        if g <= g_b:
            return g / (2.0 * self.phi1)
        return self.breakpoint + (g - g_b) / (2.0 * self.phi2)

    def to_record(self) -> dict[str, Any]:
        """Tagged record used in dumps."""
        record: dict[str, Any] = {"family": self.family.value}
        if self.family is Family.QUADRATIC:
            record["phi"] = self.phi1
        else:
            record.update(phi1=self.phi1, phi2=self.phi2, breakpoint=self.breakpoint)
        record.update(alpha=self.params.alpha, beta=self.params.beta)
        return record

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "CostFunction":
        params = ClassParams(alpha=float(record["alpha"]), beta=float(record["beta"]))
        if record["family"] == Family.QUADRATIC.value:
            return cls.quadratic(float(record["phi"]), params)
        return cls.piecewise(
            float(record["phi1"]),
            float(record["phi2"]),
            float(record["breakpoint"]),
            params,
        )


def evaluate(f: CostFunction, x: float) -> float:
    """Return f(x) for x >= 0."""
    if x < 0:
        raise DomainError("x", x)
    return f.value(x)


def grad(f: CostFunction, x: float) -> float:
    """Return f'(x) for x >= 0."""
    if x < 0:
        raise DomainError("x", x)
    return f.derivative(x)


def grad_inverse(f: CostFunction, g: float) -> float:
    """Return the unique x >= 0 with f'(x) = g, for g >= 0."""
    if g < 0:
        raise DomainError("g", g)
    return f.derivative_inverse(g)


def verify_class(
    f: CostFunction,
    grid_size: int | None = None,
    params: ClassParams | None = None,
    extent: float | None = None,
) -> bool:
    """
    Check the class certificates of ``f`` on a uniform grid.

    Verifies f(0) = 0, f'(0) = 0 and that every finite-difference slope
    of f' lies in [alpha, beta] up to 1e-8 * beta. ``params`` defaults to
    the class carried by ``f``.
    """
    grid_size = grid_size or settings.verify_grid_size
    if grid_size < 3:
        raise RcdSimError(f"verify_class needs at least 3 grid points, got {grid_size}")
    params = params or f.params
    extent = extent or settings.verify_extent

    if f.value(0.0) != 0.0 or f.derivative(0.0) != 0.0:
        return False

    xs = np.linspace(0.0, extent, grid_size)
    arrays = FunctionArrays.from_functions([f])
    slopes = np.diff(batch_grad(arrays, xs)) / np.diff(xs)
    tol = 1e-8 * params.beta
    return bool(np.all(slopes >= params.alpha - tol) and np.all(slopes <= params.beta + tol))


# ── Vectorized kernels ───────────────────────────────────────


@dataclass(frozen=True)
class FunctionArrays:
    """Parameters of many cost functions as aligned arrays."""

    phi1: np.ndarray
    phi2: np.ndarray
    breakpoint: np.ndarray

    @classmethod
    def from_functions(cls, funcs: Sequence[CostFunction]) -> "FunctionArrays":
        return cls(
            phi1=np.array([f.phi1 for f in funcs], dtype=float),
            phi2=np.array([f.phi2 for f in funcs], dtype=float),
            breakpoint=np.array([f.breakpoint for f in funcs], dtype=float),
        )

    def function(self, index: Any, params: ClassParams) -> CostFunction:
        """Materialize one entry as a CostFunction."""
        b = float(self.breakpoint[index])
        if math.isinf(b):
            return CostFunction.quadratic(float(self.phi1[index]), params)
        return CostFunction.piecewise(
            float(self.phi1[index]), float(self.phi2[index]), b, params
        )


def batch_value(arrays: FunctionArrays, x: np.ndarray) -> np.ndarray:
    """Element-wise f(x); broadcasts parameters against ``x``."""
    u = np.minimum(x, arrays.breakpoint)
    v = np.maximum(x - arrays.breakpoint, 0.0)
    return arrays.phi1 * u * u + v * (arrays.phi2 * v + 2.0 * arrays.phi1 * u)


def batch_grad(arrays: FunctionArrays, x: np.ndarray) -> np.ndarray:
    """Element-wise f'(x)."""
    u = np.minimum(x, arrays.breakpoint)
    v = np.maximum(x - arrays.breakpoint, 0.0)
    return 2.0 * (arrays.phi1 * u + arrays.phi2 * v)


def batch_grad_inverse(arrays: FunctionArrays, g: np.ndarray) -> np.ndarray:
    """Element-wise inverse of f' for g >= 0."""
    g_b = 2.0 * arrays.phi1 * arrays.breakpoint
    return np.minimum(g, g_b) / (2.0 * arrays.phi1) + np.maximum(g - g_b, 0.0) / (
        2.0 * arrays.phi2
    )


# ── Replacement laws ─────────────────────────────────────────


class ReplacementDistribution:
    """
    Sampler of incoming cost functions.

    RR draws a piecewise quadratic with phi1, phi2 ~ U[alpha/2, beta/2]
    and breakpoint ~ U(0, 2]; AR draws a quadratic with phi uniform on
    the two-point set {alpha/2, beta/2}; QUADRATIC draws a quadratic with
    phi ~ U[alpha/2, beta/2]. Owns its generator: not to be shared
    between concurrent users.
    """

    def __init__(
        self,
        mode: ReplacementMode,
        params: ClassParams,
        rng: np.random.Generator,
    ) -> None:
        self.mode = ReplacementMode(mode)
        self.params = params
        self._rng = rng

    def sample(self) -> CostFunction:
        """Draw one incoming function."""
        low, high = self.params.phi_range
        rng = self._rng
        if self.mode is ReplacementMode.AR:
            phi = low if rng.integers(2) == 0 else high
            return CostFunction.quadratic(phi, self.params)
        if self.mode is ReplacementMode.QUADRATIC:
            return CostFunction.quadratic(rng.uniform(low, high), self.params)
        phi1, phi2 = rng.uniform(low, high, size=2)
        breakpoint = 2.0 - rng.uniform(0.0, 2.0)
        return CostFunction.piecewise(phi1, phi2, breakpoint, self.params)

    def sample_many(self, count: int) -> list[CostFunction]:
        return [self.sample() for _ in range(count)]

    def sample_arrays(self, size: int | tuple[int, ...]) -> FunctionArrays:
        """Draw a block of functions with the same law as ``sample``."""
        low, high = self.params.phi_range
        rng = self._rng
        if self.mode is ReplacementMode.AR:
            phi = np.where(rng.integers(2, size=size) == 0, low, high)
            return FunctionArrays(phi, phi.copy(), np.full(size, math.inf))
        if self.mode is ReplacementMode.QUADRATIC:
            phi = rng.uniform(low, high, size=size)
            return FunctionArrays(phi, phi.copy(), np.full(size, math.inf))
        return FunctionArrays(
            rng.uniform(low, high, size=size),
            rng.uniform(low, high, size=size),
            2.0 - rng.uniform(0.0, 2.0, size=size),
        )
