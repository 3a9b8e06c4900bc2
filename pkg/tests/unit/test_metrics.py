"""
Unit tests for the metrics ledger.

Tests cover:
  - accumulate increments and the Pot = Ben + Reg identity
  - oracle violation detection
  - averaged, snapshot and merge
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcdsim.core.exceptions import HorizonError, OracleViolationError
from rcdsim.domain.metrics import MetricsLedger

values = st.floats(min_value=0.0, max_value=1e3)


class TestAccumulate:
    """Tests for MetricsLedger.accumulate()."""

    def test_equal_values_add_nothing(self):
        ledger = MetricsLedger().accumulate(3.0, 3.0, 3.0)
        assert (ledger.reg, ledger.ben, ledger.pot, ledger.T) == (0.0, 0.0, 0.0, 1)

    def test_selfish_start_of_two_agent_instance(self):
        """f_est = f_selfish = 5.5 and f_opt = 20/11 add 3.6818 to Reg and Pot."""
        ledger = MetricsLedger().accumulate(5.5, 20 / 11, 5.5)

        assert ledger.reg == pytest.approx(5.5 - 20 / 11)
        assert ledger.ben == 0.0
        assert ledger.pot == pytest.approx(5.5 - 20 / 11)

    def test_rejects_broken_oracle(self):
        with pytest.raises(OracleViolationError):
            MetricsLedger().accumulate(1.0, 1.1, 2.0)

    def test_tolerates_solver_round_off(self):
        """f_opt above f_est by less than 1e-6 is clamped, keeping Reg >= 0."""
        ledger = MetricsLedger().accumulate(1.0, 1.0 + 1e-9, 2.0)
        assert ledger.reg == 0.0
        assert ledger.pot == ledger.ben + ledger.reg

    @given(steps=st.lists(st.tuples(values, values, values), min_size=1, max_size=50))
    def test_identity_holds(self, steps):
        ledger = MetricsLedger()
        for a, b, c in steps:
            f_opt = min(a, b)
            ledger.accumulate(max(a, b), f_opt, c)
        assert ledger.pot == pytest.approx(ledger.ben + ledger.reg, rel=1e-9, abs=1e-9)
        assert ledger.T == len(steps)


class TestAveraged:
    """Tests for averaged(), snapshot() and merge()."""

    def test_single_step(self):
        ledger = MetricsLedger().accumulate(4.0, 1.0, 6.0)
        assert ledger.averaged() == (3.0, 2.0, 5.0)

    def test_empty_ledger(self):
        with pytest.raises(HorizonError):
            MetricsLedger().averaged()

    def test_snapshot_is_frozen_copy(self):
        ledger = MetricsLedger().accumulate(2.0, 1.0, 3.0)
        snap = ledger.snapshot()
        ledger.accumulate(2.0, 1.0, 3.0)
        assert snap.T == 1 and ledger.T == 2

    def test_merge_sums_segments(self):
        first = MetricsLedger().accumulate(2.0, 1.0, 3.0)
        second = MetricsLedger().accumulate(5.0, 1.0, 4.0).accumulate(1.0, 1.0, 1.0)

        merged = first.merge(second)

        assert merged == MetricsLedger(reg=5.0, ben=0.0, pot=5.0, T=3)
