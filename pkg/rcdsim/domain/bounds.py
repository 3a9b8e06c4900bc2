"""
Closed-form upper bounds on the expected performance metrics.

All bounds are functions of BoundParams (n, alpha, beta, p, C0) and the
replacement-impact constant theta:

    theta_general = (5 beta - 3 alpha) / 2
    theta_quad    = (beta - alpha) (3n^2 - 3n + 1) / (2 n^2)    (quadratic class)

Finite-horizon regret bounds use the geometric-series identities
sum eta^t = eta (1 - eta^T) / (1 - eta) and
sum t eta^t = eta (1 - T eta^(T-1) + (T-1) eta^T) / (1 - eta)^2
instead of O(T) loops; the loop form is kept as a cross-check.
"""

import math
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator

from rcdsim.core.exceptions import BoundDomainError, HorizonError
from rcdsim.domain.models import ClassParams, ExperimentConfig


class BoundParams(BaseModel):
    """Every constant feeding the bound evaluators."""

    n: int = Field(..., ge=1, description="Population size")
    alpha: float = Field(..., gt=0, description="Strong-convexity modulus")
    beta: float = Field(..., gt=0, description="Smoothness modulus")
    p: float = Field(..., ge=0, le=1, description="Update probability")
    rho_r: float = Field(..., ge=0, description="Replacement odds (1-p)/p")
    c0: float = Field(0.0, ge=0, description="Initial suboptimality")

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def _resolve_rates(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            p, rho = data.get("p"), data.get("rho_r")
            if p is None and rho is not None:
                data["p"] = 1.0 / (1.0 + float(rho))
            elif rho is None and p is not None:
                data["rho_r"] = math.inf if float(p) == 0 else (1.0 - float(p)) / float(p)
        return data

    @model_validator(mode="after")
    def _check_class(self) -> "BoundParams":
        ClassParams(alpha=self.alpha, beta=self.beta)
        return self

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, c0: float = 0.0) -> "BoundParams":
        params = cfg.class_params
        return cls(
            n=cfg.n,
            alpha=params.alpha,
            beta=params.beta,
            p=cfg.p,
            rho_r=cfg.rho_r,
            c0=c0,
        )

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    @property
    def eta(self) -> float:
        """1 - p / (kappa (n - 1)): expected contraction per event under churn."""
        if self.n < 2:
            raise BoundDomainError("eta", f"needs n >= 2, got n={self.n}")
        return 1.0 - self.p / (self.kappa * (self.n - 1))

    @property
    def m_f(self) -> float:
        """(n/2)(beta n - alpha): gap between any two feasible costs."""
        return self.n / 2.0 * (self.beta * self.n - self.alpha)

    @property
    def theta_general(self) -> float:
        return (5.0 * self.beta - 3.0 * self.alpha) / 2.0

    @property
    def theta_quad(self) -> float:
        n = self.n
        return (self.beta - self.alpha) * (3 * n * n - 3 * n + 1) / (2.0 * n * n)


def _check_horizon(T: int) -> None:
    if T < 1:
        raise HorizonError(T)


def replacement_theta(params: BoundParams, quadratic: bool = False) -> float:
    """Bound on E[delta f | replacement] for the general or quadratic class."""
    return params.theta_quad if quadratic else params.theta_general


def pot_bound(params: BoundParams, T: int) -> float:
    """Pot_T <= (n/2) alpha (kappa - 1) T; also bounds Ben_T."""
    _check_horizon(T)
    return params.n / 2.0 * params.alpha * (params.kappa - 1.0) * T


def benefit_bound(params: BoundParams, T: int) -> float:
    """Ben_T = Pot_T - Reg_T <= Pot_T."""
    return pot_bound(params, T)


def crude_gap_bound(params: BoundParams) -> float:
    """|f(x) - f(y)| <= (n/2)(n beta - alpha) for x, y in S_n."""
    return params.m_f


def crude_benefit_bound(params: BoundParams, T: int) -> float:
    _check_horizon(T)
    return params.m_f * T


def worst_case_c0(params: BoundParams) -> float:
    """A-priori C0 when the initial state is unknown."""
    return crude_gap_bound(params)


def reg_bound_finite(params: BoundParams, T: int, theta: float) -> float:
    """
    E Reg_T <= C0 sum_{t=1}^{T} eta^t
               + (1 - p) sum_{t=0}^{T-1} eta^t (M_f + (T - t) theta).
    """
    _check_horizon(T)
    eta = params.eta
    if eta >= 1.0:
        raise BoundDomainError("reg_bound_finite", f"eta={eta} >= 1 (requires p > 0)")

    one_minus = 1.0 - eta
    eta_T = eta**T
    head = eta * (1.0 - eta_T) / one_minus                       # sum_{t=1}^{T} eta^t
    s0 = (1.0 - eta_T) / one_minus                                # sum_{t=0}^{T-1} eta^t
    s1 = eta * (1.0 - T * eta ** (T - 1) + (T - 1) * eta_T) / one_minus**2  # sum t eta^t

    churn = (params.m_f + T * theta) * s0 - theta * s1
    return params.c0 * head + (1.0 - params.p) * churn


def reg_bound_finite_direct(params: BoundParams, T: int, theta: float) -> float:
    """Loop evaluation of ``reg_bound_finite``; O(T)."""
    _check_horizon(T)
    eta = params.eta
    head = math.fsum(eta**t for t in range(1, T + 1))
    churn = math.fsum(eta**t * (params.m_f + (T - t) * theta) for t in range(T))
    return params.c0 * head + (1.0 - params.p) * churn


def reg_bound_asymptotic(params: BoundParams, quadratic: bool = False) -> float:
    """
    lim E Reg_T / T.

    General:   rho_R (n-1) beta (5 kappa - 3) / 2
    Quadratic: rho_R (n-1) (3n^2 - 3n + 1)/(2n^2) beta (kappa - 1)

    The limits p -> 1 (closed system) and p -> 0 (no updates) are
    reported as 0 and +inf.
    """
    if params.p >= 1.0:
        return 0.0
    if params.p <= 0.0:
        return math.inf
    n, beta, kappa = params.n, params.beta, params.kappa
    if quadratic:
        return params.rho_r * (n - 1) * (3 * n * n - 3 * n + 1) / (2.0 * n * n) * beta * (kappa - 1.0)
    return params.rho_r * (n - 1) * beta * (5.0 * kappa - 3.0) / 2.0


def reg_bound_from_rate(rho_r: float, theta: float, gamma: float) -> float:
    """
    lim E Reg_T / T <= rho_R theta / (1 - gamma) for any algorithm with
    linear contraction rate gamma.
    """
    if gamma >= 1.0:
        raise BoundDomainError("reg_bound_from_rate", f"gamma={gamma} >= 1")
    return rho_r * theta / (1.0 - gamma)


def arrival_impact_bound(params: BoundParams) -> float:
    """An arriving agent at x = 1 adds g(1) <= beta / 2."""
    return params.beta / 2.0


def departure_impact_bound(params: BoundParams, quadratic: bool = False) -> float:
    """
    Bound on the expected cost change of a departure (expectation over
    the uniformly chosen leaving agent, from any feasible state).

    Quadratic: [beta (2n^2 - 3n + 1) - alpha (3n^2 - 3n + 1)] / (2n^2), so that
    adding the arrival term beta/2 gives exactly theta_quad.
    """
    if not quadratic:
        return 2.0 * params.beta - 1.5 * params.alpha
    n = params.n
    return (
        params.beta * (2 * n * n - 3 * n + 1) - params.alpha * (3 * n * n - 3 * n + 1)
    ) / (2.0 * n * n)


def bound_table(params: BoundParams, T: Optional[int] = None) -> dict[str, float]:
    """Ordered name -> value mapping of every bound (printed by the CLI)."""
    table: dict[str, float] = {
        "m_f": params.m_f,
        "theta_general": params.theta_general,
        "theta_quad": params.theta_quad,
        "arrival_impact": arrival_impact_bound(params),
        "departure_impact_general": departure_impact_bound(params, quadratic=False),
        "departure_impact_quad": departure_impact_bound(params, quadratic=True),
        "pot_avg": pot_bound(params, 1),
    }
    if params.n >= 2:
        table["eta"] = params.eta
    table["reg_avg_asymptotic_general"] = reg_bound_asymptotic(params, quadratic=False)
    table["reg_avg_asymptotic_quad"] = reg_bound_asymptotic(params, quadratic=True)
    if T is not None and params.n >= 2 and params.p > 0:
        table["pot_total"] = pot_bound(params, T)
        table["reg_total_general"] = reg_bound_finite(params, T, params.theta_general)
        table["reg_total_quad"] = reg_bound_finite(params, T, params.theta_quad)
    return table
