"""
Open-system event stream and the trajectory loop.

At every step exactly one event occurs, independently of the past:

  - with probability p an update U_ij, (i, j) uniform over the
    n(n-1)/2 pairs of the complete graph;
  - with probability 1 - p a replacement R_l, l uniform over the n
    slots, carrying an incoming function drawn from the replacement law.

A replacement is a departure followed by an arrival in the vacated slot:
every remaining agent moves toward the leaver's estimate,
x_i <- x_i + (x_l - x_i) / n, which leaves n - 1 units among them; the
newcomer then starts at its demand x_l = 1.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
from numpy.random import SFC64, Generator, SeedSequence

from rcdsim.core.exceptions import (
    AgentIndexError,
    ConfigError,
    HorizonError,
    InfeasibleStateError,
)
from rcdsim.core.logging import get_logger
from rcdsim.domain.allocation import (
    FEASIBILITY_RTOL,
    AllocationState,
    global_cost,
    optimal_point,
    selfish_point,
)
from rcdsim.domain.cost_functions import CostFunction, ReplacementDistribution, batch_value
from rcdsim.domain.metrics import MetricsLedger
from rcdsim.domain.rcd import RcdConfig, pair_step

logger = get_logger(__name__)

_BLOCK = 4096


class EventKind(str, Enum):
    UPDATE = "update"
    REPLACEMENT = "replacement"


@dataclass(frozen=True)
class Event:
    """One element of the event set, stamped with its step index."""

    kind: EventKind
    t: int
    i: int = -1
    j: int = -1
    leaving: int = -1
    incoming: Optional[CostFunction] = field(default=None, repr=False)

    @property
    def label(self) -> str:
        """``i-j`` for updates, the vacated slot for replacements."""
        if self.kind is EventKind.UPDATE:
            return f"{self.i}-{self.j}"
        return str(self.leaving)


@dataclass
class EventStreamConfig:
    """Update probability, population and replacement law of a stream."""

    p: float
    n: int
    dist: ReplacementDistribution
    seed: int | SeedSequence = 0

    def __post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise ConfigError("p", f"update probability must lie in (0, 1], got {self.p}")
        if self.n < 2:
            raise ConfigError("n", f"an event stream needs n >= 2, got {self.n}")

    @property
    def rho_r(self) -> float:
        return (1.0 - self.p) / self.p


class EventStream:
    """
    Deterministic i.i.d. event generator.

    Uniforms and indices are drawn in blocks and consumed one per event;
    the incoming functions come from the replacement law's own stream.
    """

    def __init__(self, cfg: EventStreamConfig) -> None:
        self.cfg = cfg
        seed = cfg.seed if isinstance(cfg.seed, SeedSequence) else SeedSequence(cfg.seed)
        self._rng = Generator(SFC64(seed))
        self._t = 0
        self._cursor = _BLOCK
        self._coins: list[float] = []
        self._firsts: list[int] = []
        self._offsets: list[int] = []

    def _refill(self) -> None:
        n = self.cfg.n
        self._coins = self._rng.random(_BLOCK).tolist()
        self._firsts = self._rng.integers(n, size=_BLOCK).tolist()
        self._offsets = self._rng.integers(1, n, size=_BLOCK).tolist()
        self._cursor = 0

    def next_draw(self) -> tuple[int, int, Optional[CostFunction]]:
        """
        Draw the next event without building an ``Event``.

        Returns ``(i, j, None)`` with i < j for an update and
        ``(leaving, -1, incoming)`` for a replacement.
        """
        if self._cursor >= _BLOCK:
            self._refill()
        k = self._cursor
        self._cursor += 1
        self._t += 1

        first = self._firsts[k]
        if self._coins[k] < self.cfg.p:
            # Uniform ordered pair with i != j, reported as an unordered pair
            second = (first + self._offsets[k]) % self.cfg.n
            if first < second:
                return first, second, None
            return second, first, None
        return first, -1, self.cfg.dist.sample()

    def next_event(self) -> Event:
        first, second, incoming = self.next_draw()
        if incoming is None:
            return Event(EventKind.UPDATE, self._t, i=first, j=second)
        return Event(EventKind.REPLACEMENT, self._t, leaving=first, incoming=incoming)


def apply_replacement(
    s: AllocationState, leaving: int, incoming: CostFunction
) -> AllocationState:
    """Departure of slot ``leaving`` then arrival of ``incoming`` at x = 1, in place."""
    s.check_index(leaving)
    x = s.x
    x_out = float(x[leaving])
    x += (x_out - x) / s.n
    x[leaving] = 1.0
    s.replace_function(leaving, incoming)
    return s


@dataclass(frozen=True)
class ReplacementImpact:
    """Cost change of one replacement, split into its two halves."""

    departure: float
    arrival: float

    @property
    def total(self) -> float:
        return self.departure + self.arrival


def replacement_impact(
    s: AllocationState, leaving: int, incoming: CostFunction
) -> ReplacementImpact:
    """Delta f of a replacement without mutating ``s``."""
    s.check_index(leaving)
    before = global_cost(s)
    moved = s.x + (s.x[leaving] - s.x) / s.n
    values = batch_value(s.arrays, moved)
    departure = float(np.sum(values) - values[leaving]) - before
    return ReplacementImpact(departure=departure, arrival=incoming.value(1.0))


def expected_departure_impact(s: AllocationState) -> float:
    """Exact expectation of the departure half over a uniform leaving slot."""
    n = s.n
    x = s.x
    before = global_cost(s)
    # Row l: estimates of the remaining agents after slot l leaves
    moved = x[np.newaxis, :] + (x[:, np.newaxis] - x[np.newaxis, :]) / n
    values = batch_value(s.arrays, moved)
    remaining = values.sum(axis=1) - np.diagonal(values)
    return float(np.mean(remaining)) - before


@dataclass
class TrajectoryRecords:
    """Per-step columns of a recorded trajectory, plus the incoming function of each replacement step."""

    kind: np.ndarray
    first: np.ndarray
    second: np.ndarray
    f_est: np.ndarray
    f_opt: np.ndarray
    f_selfish: np.ndarray
    c: np.ndarray
    d_f: np.ndarray
    d_fstar: np.ndarray
    incoming: dict[int, CostFunction] = field(default_factory=dict)

    @classmethod
    def empty(cls, T: int) -> "TrajectoryRecords":
        return cls(
            kind=np.zeros(T, dtype=np.int8),
            first=np.zeros(T, dtype=np.int64),
            second=np.full(T, -1, dtype=np.int64),
            **{name: np.zeros(T) for name in ("f_est", "f_opt", "f_selfish", "c", "d_f", "d_fstar")},
        )

    def labels(self) -> list[str]:
        """``leaving_or_pair`` column."""
        return [
            f"{a}-{b}" if k == 0 else str(a)
            for k, a, b in zip(self.kind.tolist(), self.first.tolist(), self.second.tolist())
        ]

    def kinds(self) -> list[str]:
        names = (EventKind.UPDATE.value, EventKind.REPLACEMENT.value)
        return [names[k] for k in self.kind.tolist()]

    def incoming_records(self) -> list[Optional[dict[str, Any]]]:
        """Tagged record of the arriving function per step, None for updates."""
        return [
            self.incoming[k].to_record() if k in self.incoming else None
            for k in range(self.kind.shape[0])
        ]


@dataclass
class Trajectory:
    """Outcome of one run: ledger, optional per-step records, checkpoint snapshots."""

    T: int
    ledger: MetricsLedger
    c0: float
    initial_values: tuple[float, float, float]
    replacement_count: int
    final_state: AllocationState
    records: Optional[TrajectoryRecords] = None
    checkpoints: list[int] = field(default_factory=list)
    checkpoint_ledgers: list[MetricsLedger] = field(default_factory=list)
    checkpoint_c: list[float] = field(default_factory=list)


def run_trajectory(
    x0: AllocationState,
    stream: EventStream,
    rcd: RcdConfig,
    T: int,
    record: bool = True,
    checkpoints: Sequence[int] | None = None,
) -> Trajectory:
    """
    Drive ``T`` events from ``x0`` (which is left untouched).

    x*^t is only recomputed after replacements: updates do not change
    f^t, so the optimum and the selfish value carry over.

    Feasibility holds after every event. An update moves two coordinates
    by opposite amounts, so only their signs and the rounding of their
    sum are checked; the full S_n check runs once the accumulated
    rounding reaches the tolerance, after every replacement, at each
    checkpoint and at the end.

    Raises:
        HorizonError: T < 1.
        InfeasibleStateError: an event broke feasibility.
    """
    if T < 1:
        raise HorizonError(T)
    state = x0.copy()
    state.check_feasible()
    n = state.n
    if n != stream.cfg.n:
        raise AgentIndexError(n, stream.cfg.n, "state and stream disagree on n")

    opt = optimal_point(state)
    f_opt = opt.value
    f_self = selfish_point(state).value
    f_est = global_cost(state)
    c0 = max(f_est - f_opt, 0.0)
    initial = (f_est, f_opt, f_self)

    ledger = MetricsLedger()
    records = TrajectoryRecords.empty(T) if record else None
    grid = sorted(set(checkpoints or ()))
    grid_iter = iter(grid)
    next_checkpoint = next(grid_iter, None)
    snapshots: list[MetricsLedger] = []
    snapshot_c: list[float] = []
    replacements = 0

    x = state.x
    h = rcd.step_size
    drift_budget = FEASIBILITY_RTOL * n
    drift = abs(float(np.sum(x)) - n)

    for t in range(1, T + 1):
        prev_est, prev_opt = f_est, f_opt
        first, second, incoming = stream.next_draw()

        if incoming is None:
            before = x[first] + x[second]
            f_est += pair_step(state, first, second, h)
            new_i, new_j = x[first], x[second]
            if new_i < 0 or new_j < 0:
                raise InfeasibleStateError(f"negative estimate {float(min(new_i, new_j))!r}")
            drift += abs(float(new_i + new_j - before))
            if drift > drift_budget:
                state.check_feasible()
                drift = abs(float(np.sum(x)) - n)
        else:
            apply_replacement(state, first, incoming)
            replacements += 1
            f_opt = optimal_point(state).value
            f_self = selfish_point(state).value
            f_est = global_cost(state)
            drift = abs(float(np.sum(x)) - n)

        ledger.accumulate(f_est, f_opt, f_self)

        if records is not None:
            k = t - 1
            records.first[k] = first
            if incoming is None:
                records.second[k] = second
            else:
                records.kind[k] = 1
                records.incoming[k] = incoming
            records.f_est[k] = f_est
            records.f_opt[k] = f_opt
            records.f_selfish[k] = f_self
            records.c[k] = f_est - f_opt
            records.d_f[k] = f_est - prev_est
            records.d_fstar[k] = f_opt - prev_opt

        if t == next_checkpoint:
            state.check_feasible()
            snapshots.append(ledger.snapshot())
            snapshot_c.append(f_est - f_opt)
            next_checkpoint = next(grid_iter, None)

    state.check_feasible()
    logger.debug(
        "Trajectory finished: T=%d, replacements=%d, Reg_T=%.6e", T, replacements, ledger.reg
    )
    return Trajectory(
        T=T,
        ledger=ledger,
        c0=c0,
        initial_values=initial,
        replacement_count=replacements,
        final_state=state,
        records=records,
        checkpoints=[c for c in grid if c <= T],
        checkpoint_ledgers=snapshots,
        checkpoint_c=snapshot_c,
    )
