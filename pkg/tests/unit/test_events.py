"""
Unit tests for the open-system event stream and the trajectory loop.

Tests cover:
  - event stream law (update share, pair frequencies, determinism)
  - apply_replacement redistribution
  - replacement_impact / expected_departure_impact
  - run_trajectory ledgers, records, checkpoints and feasibility
"""

import numpy as np
import pytest

from rcdsim.core.exceptions import ConfigError, HorizonError, InfeasibleStateError
from rcdsim.domain.allocation import FEASIBILITY_RTOL, AllocationState, global_cost, initial_state
from rcdsim.domain.bounds import BoundParams, departure_impact_bound
from rcdsim.domain.cost_functions import CostFunction, ReplacementDistribution
from rcdsim.domain.events import (
    EventKind,
    EventStream,
    EventStreamConfig,
    apply_replacement,
    expected_departure_impact,
    replacement_impact,
    run_trajectory,
)
from rcdsim.domain.models import ClassParams, ReplacementMode
from rcdsim.domain.rcd import RcdConfig
from rcdsim.domain.selftest import random_feasible_state


def make_stream(p: float, n: int, dist: ReplacementDistribution, seed: int = 0) -> EventStream:
    return EventStream(EventStreamConfig(p=p, n=n, dist=dist, seed=seed))


class TestEventStream:
    """Tests for EventStream.next_event() and next_draw()."""

    def test_closed_system_only_updates(self, ar_distribution):
        stream = make_stream(1.0, 4, ar_distribution)
        assert all(stream.next_event().kind is EventKind.UPDATE for _ in range(5000))

    def test_pair_frequencies(self, ar_distribution):
        """p=0.5, n=3: each pair appears with frequency near 1/6 over 1e5 draws."""
        stream = make_stream(0.5, 3, ar_distribution, seed=3)
        counts = {"0-1": 0, "0-2": 0, "1-2": 0}
        draws = 100_000
        for _ in range(draws):
            event = stream.next_event()
            if event.kind is EventKind.UPDATE:
                assert event.i < event.j
                counts[event.label] += 1
        for count in counts.values():
            assert 0.158 <= count / draws <= 0.175

    def test_replacement_share(self, ar_distribution):
        stream = make_stream(0.8, 5, ar_distribution, seed=11)
        events = [stream.next_event() for _ in range(20_000)]
        share = sum(e.kind is EventKind.REPLACEMENT for e in events) / len(events)
        assert 0.19 <= share <= 0.21
        assert all(0 <= e.leaving < 5 for e in events if e.kind is EventKind.REPLACEMENT)

    def test_steps_are_numbered(self, ar_distribution):
        stream = make_stream(0.5, 3, ar_distribution)
        assert [stream.next_event().t for _ in range(3)] == [1, 2, 3]

    def test_draws_match_events(self, class_params):
        """next_draw yields the same sequence as next_event for the same seed."""
        def stream(seed):
            dist = ReplacementDistribution(ReplacementMode.AR, class_params, np.random.default_rng(1))
            return make_stream(0.6, 4, dist, seed=seed)

        by_event, by_draw = stream(8), stream(8)

        for _ in range(1000):
            event = by_event.next_event()
            first, second, incoming = by_draw.next_draw()
            if event.kind is EventKind.UPDATE:
                assert (first, second, incoming) == (event.i, event.j, None)
            else:
                assert (first, second) == (event.leaving, -1)
                assert incoming == event.incoming

    def test_deterministic_given_seed(self, class_params):
        def labels(seed):
            dist = ReplacementDistribution(ReplacementMode.RR, class_params, np.random.default_rng(1))
            stream = make_stream(0.7, 4, dist, seed=seed)
            return [(e.kind, e.label, e.incoming) for e in (stream.next_event() for _ in range(500))]

        assert labels(5) == labels(5)
        assert labels(5) != labels(6)

    def test_replacement_odds(self, ar_distribution):
        """rho_R = 0.0125 means one replacement every 81 events."""
        cfg = EventStreamConfig(p=1 / 1.0125, n=5, dist=ar_distribution)
        assert cfg.rho_r == pytest.approx(0.0125)
        assert 1 / (1 - cfg.p) == pytest.approx(81.0)

    @pytest.mark.parametrize("p, n", [(0.0, 3), (1.5, 3), (0.5, 1)])
    def test_invalid_config(self, ar_distribution, p, n):
        with pytest.raises(ConfigError):
            EventStreamConfig(p=p, n=n, dist=ar_distribution)


class TestApplyReplacement:
    """Tests for apply_replacement()."""

    def test_two_agent_redistribution(self, class_params):
        """x=(2, 0), slot 0 leaves: the remaining agent gets 1, the newcomer 1."""
        f = CostFunction.quadratic(1.0, class_params)
        state = AllocationState([2.0, 0.0], [f, f])
        incoming = CostFunction.quadratic(3.0, class_params)

        apply_replacement(state, 0, incoming)

        np.testing.assert_allclose(state.x, [1.0, 1.0])
        assert state.funcs[0] is incoming

    def test_selfish_state_unchanged(self, ar_distribution, class_params):
        state = initial_state(5, ar_distribution)
        apply_replacement(state, 3, CostFunction.quadratic(1.0, class_params))
        np.testing.assert_array_equal(state.x, np.ones(5))

    def test_budget_preserved(self, rr_distribution, rng):
        state = random_feasible_state(6, rr_distribution, rng)
        for _ in range(1000):
            apply_replacement(state, int(rng.integers(6)), rr_distribution.sample())
        assert abs(state.x.sum() - 6) <= 1e-9 * 6
        assert np.all(state.x >= 0)


class TestReplacementImpact:
    """Tests for replacement_impact() and expected_departure_impact()."""

    def test_matches_applied_replacement(self, rr_distribution, rng):
        state = random_feasible_state(4, rr_distribution, rng)
        incoming = rr_distribution.sample()
        before = state.copy()

        impact = replacement_impact(state, 2, incoming)
        apply_replacement(state, 2, incoming)

        assert impact.total == pytest.approx(global_cost(state) - global_cost(before), abs=1e-12)
        assert impact.arrival == pytest.approx(incoming.value(1.0))

    def test_expected_departure_is_average(self, rr_distribution, rng):
        state = random_feasible_state(5, rr_distribution, rng)
        some = rr_distribution.sample()
        average = np.mean([replacement_impact(state, k, some).departure for k in range(5)])
        assert expected_departure_impact(state) == pytest.approx(average, rel=1e-12, abs=1e-12)

    def test_quadratic_departure_bound(self, ar_distribution, rng):
        """From any state of quadratics the mean departure stays below its bound."""
        bound = departure_impact_bound(
            BoundParams(n=5, alpha=1.0, beta=10.0, p=0.5), quadratic=True
        )
        for _ in range(200):
            state = random_feasible_state(5, ar_distribution, rng)
            assert expected_departure_impact(state) <= bound + 1e-12


class TestRunTrajectory:
    """Tests for run_trajectory()."""

    def _setup(self, class_params, p, n=5, seed=0, mode=ReplacementMode.AR):
        dist = ReplacementDistribution(mode, class_params, np.random.default_rng(seed))
        state = initial_state(n, dist)
        stream = make_stream(p, n, dist, seed=seed + 100)
        return state, stream, RcdConfig(params=class_params)

    def test_ledger_identities(self, class_params):
        """Pot = Ben + Reg and C_{t+1} = C_t + dF - dF* along the trajectory."""
        state, stream, rcd = self._setup(class_params, p=0.7, mode=ReplacementMode.RR)

        trajectory = run_trajectory(state, stream, rcd, 2000)

        ledger = trajectory.ledger
        assert ledger.pot == pytest.approx(ledger.ben + ledger.reg, rel=1e-9)
        records = trajectory.records
        c_prev = np.concatenate([[trajectory.c0], records.c[:-1]])
        np.testing.assert_allclose(
            records.c, c_prev + records.d_f - records.d_fstar, rtol=1e-9, atol=1e-9
        )
        assert ledger.reg == pytest.approx(records.c.sum(), rel=1e-9)

    def test_closed_system_keeps_optimum(self, class_params):
        state, stream, rcd = self._setup(class_params, p=1.0)
        trajectory = run_trajectory(state, stream, rcd, 500)
        assert np.all(trajectory.records.d_fstar == 0.0)
        assert trajectory.replacement_count == 0

    def test_closed_system_converges(self):
        """p=1, n=3, kappa=2, T=1e4: C_T <= 1e-6 C_0 on each of 50 seeds."""
        params = ClassParams(alpha=1.0, beta=2.0)
        for seed in range(50):
            state, stream, rcd = self._setup(params, p=1.0, n=3, seed=seed, mode=ReplacementMode.RR)
            trajectory = run_trajectory(state, stream, rcd, 10_000, record=False, checkpoints=[10_000])
            assert trajectory.checkpoint_c[-1] <= 1e-6 * trajectory.c0 + 1e-12

    def test_traces_above_lower_envelope(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.8, mode=ReplacementMode.RR)
        records = run_trajectory(state, stream, rcd, 1000).records
        for column in (records.f_est, records.f_opt, records.f_selfish):
            assert np.all(column >= 0.5 * 5 - 1e-12)

    def test_records_labels(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.5, n=3)
        records = run_trajectory(state, stream, rcd, 200).records
        for kind, label in zip(records.kinds(), records.labels()):
            if kind == "update":
                assert label in {"0-1", "0-2", "1-2"}
            else:
                assert label in {"0", "1", "2"}

    def test_streaming_checkpoints_match_recorded_run(self, class_params):
        grid = [1, 2, 4, 8, 16, 32, 50]
        state, stream, rcd = self._setup(class_params, p=0.6, seed=4)
        recorded = run_trajectory(state, stream, rcd, 50)
        state, stream, rcd = self._setup(class_params, p=0.6, seed=4)
        streamed = run_trajectory(state, stream, rcd, 50, record=False, checkpoints=grid)

        assert streamed.records is None
        assert streamed.checkpoints == grid
        cumulative = np.cumsum(recorded.records.c)
        for T, snap, c in zip(grid, streamed.checkpoint_ledgers, streamed.checkpoint_c):
            assert snap.T == T
            assert snap.reg == pytest.approx(cumulative[T - 1], rel=1e-9, abs=1e-9)
            assert c == pytest.approx(recorded.records.c[T - 1])

    def test_input_state_untouched(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.9)
        run_trajectory(state, stream, rcd, 100)
        np.testing.assert_array_equal(state.x, np.ones(5))

    def test_empty_horizon(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.9)
        with pytest.raises(HorizonError):
            run_trajectory(state, stream, rcd, 0)

    def test_replacements_keep_incoming_functions(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.6, mode=ReplacementMode.RR)

        trajectory = run_trajectory(state, stream, rcd, 300)

        records = trajectory.records
        replaced = set(np.nonzero(records.kind == 1)[0].tolist())
        assert set(records.incoming) == replaced
        assert len(replaced) == trajectory.replacement_count
        tagged = records.incoming_records()
        assert all((tagged[k] is None) == (k not in replaced) for k in range(300))
        for k in replaced:
            assert tagged[k]["family"] == "piecewise_quadratic"

    def test_negative_estimate_raises(self):
        """A step far above 1/beta overshoots and the loop stops on the negative coordinate."""
        # Arrange
        declared = ClassParams(alpha=1.0, beta=10.0)
        funcs = [CostFunction.quadratic(phi, declared) for phi in (0.5, 5.0, 0.5, 5.0, 0.5)]
        state = AllocationState(np.ones(5), funcs)
        dist = ReplacementDistribution(ReplacementMode.AR, declared, np.random.default_rng(0))
        stream = make_stream(1.0, 5, dist, seed=2)
        overshoot = RcdConfig(params=ClassParams(alpha=0.1, beta=0.1))

        # Act / Assert
        with pytest.raises(InfeasibleStateError, match="negative estimate"):
            run_trajectory(state, stream, overshoot, 50, record=False)

    def test_final_state_feasible(self, class_params):
        state, stream, rcd = self._setup(class_params, p=0.9, mode=ReplacementMode.RR)

        final = run_trajectory(state, stream, rcd, 5000, record=False).final_state

        assert abs(final.x.sum() - 5) <= FEASIBILITY_RTOL * 5
        assert np.all(final.x >= 0)

    @pytest.mark.slow
    def test_million_mixed_events_stay_feasible(self, class_params):
        """n=5, rho_R=0.0125: 1e6 updates and replacements never leave S_n."""
        # Arrange
        T = 1_000_000
        state, stream, rcd = self._setup(class_params, p=1 / 1.0125, mode=ReplacementMode.RR, seed=7)

        # Act
        trajectory = run_trajectory(state, stream, rcd, T, record=False, checkpoints=[T])

        # Assert
        final = trajectory.final_state
        assert abs(final.x.sum() - 5) <= FEASIBILITY_RTOL * 5
        assert np.all(final.x >= 0)
        assert trajectory.checkpoint_ledgers[-1].T == T
        # one replacement every 81 events on average
        assert 11_500 <= trajectory.replacement_count <= 13_200
