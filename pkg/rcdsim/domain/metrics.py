"""
Running performance metrics of one trajectory.

    Reg_T = sum (f^t(x^t)   - f^t(x*^t))     dynamical regret
    Ben_T = sum (f^t(1_n)   - f^t(x^t))      benefit
    Pot_T = sum (f^t(1_n)   - f^t(x*^t))     potential benefit

so that Pot_T = Ben_T + Reg_T. Step t contributes the values evaluated
after event t has been applied; the initial state only enters the
bounds through C0.
"""

from dataclasses import dataclass, replace

from rcdsim.core.exceptions import HorizonError, OracleViolationError

ORACLE_TOLERANCE = 1e-6


@dataclass
class MetricsLedger:
    """Accumulated Reg / Ben / Pot over ``T`` steps."""

    reg: float = 0.0
    ben: float = 0.0
    pot: float = 0.0
    T: int = 0

    def accumulate(self, f_est: float, f_opt: float, f_selfish: float) -> "MetricsLedger":
        """
        Add one step.

        Raises:
            OracleViolationError: f_opt > f_est + 1e-6 (broken optimum solver).
        """
        if f_opt > f_est + ORACLE_TOLERANCE:
            raise OracleViolationError(f_est, f_opt)
        # Solver round-off: the optimum never exceeds the estimate
        f_opt = min(f_opt, f_est)
        self.reg += f_est - f_opt
        self.ben += f_selfish - f_est
        self.pot += f_selfish - f_opt
        self.T += 1
        return self

    def averaged(self) -> tuple[float, float, float]:
        """(Reg_T / T, Ben_T / T, Pot_T / T)."""
        if self.T < 1:
            raise HorizonError(self.T)
        return self.reg / self.T, self.ben / self.T, self.pot / self.T

    def snapshot(self) -> "MetricsLedger":
        return replace(self)

    def merge(self, other: "MetricsLedger") -> "MetricsLedger":
        """Associative sum of two ledgers (e.g. consecutive segments)."""
        return MetricsLedger(
            reg=self.reg + other.reg,
            ben=self.ben + other.ben,
            pot=self.pot + other.pot,
            T=self.T + other.T,
        )
