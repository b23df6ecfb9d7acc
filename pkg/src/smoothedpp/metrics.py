"""Round, frontier, and stabilization accounting for clock trials.

The compiled kernels keep these counters inline for speed; MetricsTracker is
the reference implementation driven by the pure-python engine, and the
differential tests hold both to identical outputs.  Event steps carry the
0-based index of the interaction that produced the event; a condition the
initial configuration already satisfies reports 0, indistinguishable from
one the first interaction establishes.

Round vocabulary, for a population whose hours all start at zero:

* round i ends at the step where the maximum hour first reaches i + 1
  (rollovers only, so ends arrive one hour at a time);
* round i starts at the step where the minimum hour first reaches i
  (adoption can skip hours, which records several starts at one step);
* length(i) clips end - start at zero, stretch(i) is the span between
  consecutive ends with the end of round -1 taken as step 0;
* a round is complete once both its end and its start are known, so the
  number of complete rounds is min(max_hour, min_hour + 1).

When a trial is resumed from states with nonzero hours, ends before the
resume point are unknown and the first observed stretch is measured from the
resume instead; the same convention gives the initial frontier row a start
of 0.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .protocols import Protocol, ProtocolKind, tick_consumption

# Violation bits, mirrored by the kernels.  OR-combined in TrialMetrics.violations.
V_RANGE = 1            # a counter left its documented range
V_HOUR_DECREASE = 2    # an agent's true hour decreased
V_MAX_JUMP = 4         # the max hour advanced by more than one at once
V_MPRIME_JUMP = 8      # the frontier minute advanced by more than one at once
V_LEADER_GROWTH = 16   # the leader count increased
V_MAX_LEVEL_UNLED = 32  # no leader held the max level (amended rule only)

VIOLATION_NAMES = {
    V_RANGE: "range",
    V_HOUR_DECREASE: "hour-decrease",
    V_MAX_JUMP: "max-hour-jump",
    V_MPRIME_JUMP: "frontier-minute-jump",
    V_LEADER_GROWTH: "leader-growth",
    V_MAX_LEVEL_UNLED: "max-level-unled",
}

# How many frontier rounds keep a per-minute timeline, counted from the round
# that is current when the trial begins.
TIMELINE_ROUNDS = 16


def violation_names(mask: int) -> list[str]:
    return [name for bit, name in VIOLATION_NAMES.items() if mask & bit]


@dataclass(frozen=True, slots=True)
class RoundMetrics:
    """One complete round: both boundary events were observed.

    stretch is the span back to the previous round's end event (step 0 for
    the first recorded round), length the start-to-end span clipped at zero;
    length can genuinely be zero when adoption starts a round at the same
    step that ends it.
    """

    index: int
    start_step: int
    end_step: int
    stretch: int

    @property
    def length(self) -> int:
        return max(0, self.end_step - self.start_step)


@dataclass(frozen=True, slots=True)
class MinuteTimeline:
    """Steps at which the frontier minute reached each value within one round.

    steps has M + 1 entries: entry 0 is the step the round's hour became the
    maximum (0 for the round already current at trial start), entries 1..M-1
    are the frontier-minute events inside the round, and entry M is the step
    the next hour was reached.  None marks events that were not observed.
    """

    hour: int
    steps: tuple[int | None, ...]

    def gaps(self) -> list[int]:
        """Spans between consecutive observed events; the raw material for
        the minute-gap statistics."""
        out = []
        for a, b in zip(self.steps, self.steps[1:]):
            if a is not None and b is not None:
                out.append(b - a)
        return out


@dataclass(frozen=True, slots=True)
class StabilizationReport:
    initial_leaders: int
    final_leaders: int
    stabilization_steps: int | None
    zero_leader_step: int | None
    leaders_at_round_ends: tuple[int, ...]

    @property
    def reached_single_leader(self) -> bool:
        return self.stabilization_steps is not None


@dataclass(frozen=True)
class TrialMetrics:
    """Everything a trial reports besides configurations themselves."""

    n: int
    steps_executed: int
    random_steps: int
    coin_steps: int
    coin_heads: int
    violations: int
    max_hour: int | None
    min_hour: int | None
    rounds: tuple[RoundMetrics, ...]
    minute_timelines: tuple[MinuteTimeline, ...]
    minute_events: int
    frontier_minute: int
    epidemic_finish: int | None
    stabilization: StabilizationReport | None
    ticks_consumed: int
    ticks_incremented: int

    @property
    def random_step_fraction(self) -> float:
        if self.steps_executed == 0:
            return 0.0
        return self.random_steps / self.steps_executed

    @property
    def rounds_completed(self) -> int:
        return len(self.rounds)

    def round(self, index: int) -> RoundMetrics:
        for r in self.rounds:
            if r.index == index:
                return r
        raise KeyError(f"round {index} was not completed in this trial")

    def round_lengths(self) -> list[int]:
        return [r.length for r in self.rounds]

    def round_stretches(self) -> list[int]:
        return [r.stretch for r in self.rounds]


def assemble_rounds(
    initial_max_hour: int,
    initial_min_hour: int,
    end_steps: Sequence[int],
    start_steps: Sequence[int],
) -> tuple[RoundMetrics, ...]:
    """Pair up end and start events into complete rounds.

    end_steps[k] is the step the max hour reached initial_max_hour + k + 1,
    start_steps[j] the step the min hour reached initial_min_hour + j + 1.
    Rounds at or below the initial min hour get start 0; the stretch of the
    first recorded round is measured from step 0.
    """
    rounds = []
    prev_end = 0
    for k, end in enumerate(end_steps):
        index = initial_max_hour + k
        if index <= initial_min_hour:
            start = 0
        else:
            j = index - initial_min_hour - 1
            if j >= len(start_steps):
                break  # this end's start was never reached; later ones can't be either
            start = start_steps[j]
        rounds.append(RoundMetrics(index, start, end, end - prev_end))
        prev_end = end
    return tuple(rounds)


def assemble_timelines(
    raw: Sequence[Sequence[int | None]],
    initial_max_hour: int,
    max_hour: int,
    end_steps: Sequence[int],
    minutes_per_hour: int,
) -> tuple[MinuteTimeline, ...]:
    """Attach boundary events to the recorded frontier-minute rows.

    raw[row][k] is the step index of frontier-minute event k in the round
    at hour initial_max_hour + row, or None; only columns 1..M-1 are ever
    recorded during the run, the boundaries come from end_steps here.
    """
    out = []
    last = min(max_hour, initial_max_hour + len(raw) - 1)
    for h in range(initial_max_hour, last + 1):
        row = raw[h - initial_max_hour]
        steps: list[int | None] = [None] * (minutes_per_hour + 1)
        for k in range(1, minutes_per_hour):
            steps[k] = row[k]
        k_entry = h - initial_max_hour - 1
        if h == initial_max_hour:
            steps[0] = 0
        elif k_entry < len(end_steps):
            # under a max-hour jump (a flagged violation) there are fewer end
            # events than hours covered; leave the orphaned boundary unknown
            steps[0] = end_steps[k_entry]
        if h - initial_max_hour < len(end_steps):
            steps[minutes_per_hour] = end_steps[h - initial_max_hour]
        out.append(MinuteTimeline(h, tuple(steps)))
    return tuple(out)


class MetricsTracker:
    """Per-step bookkeeping for the pure-python engine.

    Mirrors the kernels' inline counters field for field.  observe_step must
    see every interaction exactly once and in order; finalize() then builds
    the TrialMetrics.
    """

    def __init__(self, protocol: Protocol, states: Sequence, ordered: bool) -> None:
        self.protocol = protocol
        self.ordered = ordered
        self.n = len(states)
        self.next_step = 0
        self.random_steps = 0
        self.coin_steps = 0
        self.coin_heads = 0
        self.violations = 0

        kind = protocol.kind
        self._has_hours = kind is not ProtocolKind.EPIDEMIC
        self._has_minutes = kind in (
            ProtocolKind.SMOOTHED_CLOCK,
            ProtocolKind.LEADER_ELECTION,
        )
        self._is_leader = kind is ProtocolKind.LEADER_ELECTION

        self._infected = 0
        self.epidemic_finish: int | None = None
        if kind is ProtocolKind.EPIDEMIC:
            self._infected = sum(1 for s in states if s == 1)
            if self._infected == self.n:
                self.epidemic_finish = 0

        self._end_steps: list[int] = []
        self._start_steps: list[int] = []
        self.minute_events = 0
        self._cnt: Counter[int] = Counter()
        self._gmax = 0
        self._gmin = 0
        self._m_prime = 0
        self._minutes_m = 0
        self._timeline: list[list[int | None]] = []
        if self._has_hours:
            hours = [protocol.hour_of(s) for s in states]
            self._cnt = Counter(hours)
            self._gmax = max(hours)
            self._gmin = min(hours)
            if self._has_minutes:
                assert protocol.clock is not None
                self._minutes_m = protocol.clock.M
                self._m_prime = max(
                    (
                        protocol.minute_of(s) or 0
                        for s, h in zip(states, hours)
                        if h == self._gmax
                    ),
                    default=0,
                )
                self._timeline = [
                    [None] * (self._minutes_m + 1) for _ in range(TIMELINE_ROUNDS)
                ]
        self._initial_gmax = self._gmax
        self._initial_gmin = self._gmin

        self.ticks_consumed = 0
        self.ticks_incremented = 0
        self._leader_count = 0
        self.initial_leaders = 0
        self._stab: int | None = None
        self._zero: int | None = None
        self._leaders_at_end: list[int] = []
        self._top_level = 0
        self._top_leaders = 0
        if self._is_leader:
            self._leader_count = sum(1 for s in states if s.leader)
            self.initial_leaders = self._leader_count
            if self._leader_count == 1:
                self._stab = 0
            elif self._leader_count == 0:
                self._zero = 0
            self._top_level = max(s.level for s in states)
            self._top_leaders = sum(
                1 for s in states if s.leader and s.level == self._top_level
            )

    # -- per-step ------------------------------------------------------------

    def observe_step(
        self,
        step_index: int,
        old_u,
        old_v,
        new_u,
        new_v,
        *,
        source_random: bool,
        coin: int | None,
    ) -> None:
        if step_index != self.next_step:
            raise ValueError(
                f"steps must be observed in order: expected {self.next_step}, "
                f"got {step_index}"
            )
        self.next_step = step_index + 1
        if source_random:
            self.random_steps += 1
        if coin is not None:
            self.coin_steps += 1
            self.coin_heads += coin

        protocol = self.protocol
        if protocol.kind is ProtocolKind.EPIDEMIC:
            if old_v == 0 and new_v == 1:
                self._infected += 1
                if self._infected == self.n and self.epidemic_finish is None:
                    self.epidemic_finish = step_index
            return

        if not protocol.state_ok(new_u) or not protocol.state_ok(new_v):
            self.violations |= V_RANGE

        if self._is_leader:
            self._observe_leader(step_index, old_u, old_v, new_u, new_v, coin)

        old_h = protocol.hour_of(old_u)
        new_h = protocol.hour_of(new_u)
        assert old_h is not None and new_h is not None
        new_minute = protocol.minute_of(new_u) if self._has_minutes else 0
        prev_ends = len(self._end_steps)
        self._observe_hour(step_index, old_h, new_h, new_minute or 0)
        if self._is_leader and len(self._end_steps) > prev_ends:
            self._leaders_at_end.append(self._leader_count)

    def _observe_hour(self, step: int, old_h: int, new_h: int, new_minute: int) -> None:
        event_step = step
        if new_h != old_h:
            if new_h < old_h:
                self.violations |= V_HOUR_DECREASE
            self._cnt[old_h] -= 1
            self._cnt[new_h] += 1
            if new_h > self._gmax:
                if new_h != self._gmax + 1:
                    self.violations |= V_MAX_JUMP
                self._end_steps.append(event_step)
                self._gmax = new_h
                self._m_prime = new_minute
                self.minute_events += 1
            elif self._minutes_m > 0 and new_h == self._gmax and new_minute > self._m_prime:
                self.violations |= V_MPRIME_JUMP
            while self._gmin < self._gmax and self._cnt[self._gmin] == 0:
                self._gmin += 1
                self._start_steps.append(event_step)
        elif self._minutes_m > 0 and new_h == self._gmax and new_minute > self._m_prime:
            if new_minute != self._m_prime + 1:
                self.violations |= V_MPRIME_JUMP
            self._m_prime = new_minute
            self.minute_events += 1
            row = self._gmax - self._initial_gmax
            if 0 <= row < len(self._timeline) and new_minute <= self._minutes_m:
                self._timeline[row][new_minute] = event_step

    def _observe_leader(self, step: int, old_u, old_v, new_u, new_v, coin: int | None) -> None:
        assert self.protocol.leader is not None
        consumed, incremented = tick_consumption(
            old_u, old_v, coin, self.protocol.leader, self.ordered
        )
        self.ticks_consumed += consumed
        self.ticks_incremented += incremented

        delta = 0
        if old_u.leader and not new_u.leader:
            delta -= 1
        if not old_u.leader and new_u.leader:
            delta += 1
            self.violations |= V_LEADER_GROWTH
        if old_v.leader and not new_v.leader:
            delta -= 1
        if not old_v.leader and new_v.leader:
            delta += 1
            self.violations |= V_LEADER_GROWTH
        self._leader_count += delta
        if delta != 0:
            if self._leader_count == 1 and self._stab is None:
                self._stab = step
            if self._leader_count == 0 and self._zero is None:
                self._zero = step

        new_top = max(self._top_level, new_u.level, new_v.level)
        if new_top > self._top_level:
            self._top_level = new_top
            self._top_leaders = 0
            if new_u.level == new_top and new_u.leader:
                self._top_leaders += 1
            if new_v.level == new_top and new_v.leader:
                self._top_leaders += 1
        else:
            top = self._top_level
            if old_u.level == top and old_u.leader:
                self._top_leaders -= 1
            if new_u.level == top and new_u.leader:
                self._top_leaders += 1
            if old_v.level == top and old_v.leader:
                self._top_leaders -= 1
            if new_v.level == top and new_v.leader:
                self._top_leaders += 1
        if (
            self.protocol.leader.amended_two_leader
            and self._leader_count >= 1
            and self._top_leaders == 0
        ):
            self.violations |= V_MAX_LEVEL_UNLED

    # -- end of trial ----------------------------------------------------------

    @property
    def leader_count(self) -> int:
        return self._leader_count

    @property
    def rounds_complete(self) -> int:
        if not self._has_hours:
            return 0
        return min(self._gmax, self._gmin + 1)

    def finalize(self) -> TrialMetrics:
        stab_report = None
        if self._is_leader:
            stab_report = StabilizationReport(
                initial_leaders=self.initial_leaders,
                final_leaders=self._leader_count,
                stabilization_steps=self._stab,
                zero_leader_step=self._zero,
                leaders_at_round_ends=tuple(self._leaders_at_end),
            )
        timelines: tuple[MinuteTimeline, ...] = ()
        if self._has_minutes:
            timelines = assemble_timelines(
                self._timeline,
                self._initial_gmax,
                self._gmax,
                self._end_steps,
                self._minutes_m,
            )
        return TrialMetrics(
            n=self.n,
            steps_executed=self.next_step,
            random_steps=self.random_steps,
            coin_steps=self.coin_steps,
            coin_heads=self.coin_heads,
            violations=self.violations,
            max_hour=self._gmax if self._has_hours else None,
            min_hour=self._gmin if self._has_hours else None,
            rounds=assemble_rounds(
                self._initial_gmax, self._initial_gmin, self._end_steps, self._start_steps
            ),
            minute_timelines=timelines,
            minute_events=self.minute_events if self._has_minutes else 0,
            frontier_minute=self._m_prime if self._has_minutes else 0,
            epidemic_finish=self.epidemic_finish,
            stabilization=stab_report,
            ticks_consumed=self.ticks_consumed,
            ticks_incremented=self.ticks_incremented,
        )
