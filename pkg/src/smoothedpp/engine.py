"""Trial execution.

Two interchangeable paths run a trial: compiled kernels (numba) for the
experiment volumes, and a pure-python loop that exists to be read, to host
custom adversary strategies, and to pin the kernels down in differential
tests.  Both consume the same counter-based randomness, so for the built-in
strategies they produce bit-identical traces, final configurations, and
metrics.

Event fields (round boundaries, epidemic finish, stabilization) carry the
0-based index of the interaction that produced them; a condition already
satisfied by the initial configuration reports 0, same as one satisfied by
the first interaction.  Snapshot steps instead count executed interactions,
so ``trace[:s]`` replayed from the initial configuration lands exactly on
the snapshot labelled ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .adversaries import StrategyKind, StrategySpec, make_strategy
from .metrics import (
    TIMELINE_ROUNDS,
    MetricsTracker,
    StabilizationReport,
    TrialMetrics,
    assemble_rounds,
    assemble_timelines,
)
from .protocols import (
    ClockState,
    JuntaClockState,
    LeaderState,
    LeaderlessClockState,
    Protocol,
    ProtocolKind,
)
from .rng import (
    ADVERSARY_STREAM,
    COIN_STREAM,
    ORDER_STREAM,
    PAIR_STREAM,
    REPLACEMENT_STREAM,
    SubstreamRng,
    stream_base,
)
from .schedulers import (
    AdversaryObservation,
    AdversaryStrategy,
    Interaction,
    RandomnessMode,
    ScheduleStep,
    SmoothingParams,
    StepSource,
    next_interaction,
)

AgentId = int

# Traces hold every executed step in memory; anything longer than this should
# stream summaries instead.
MAX_TRACE_STEPS = 20_000_000

_SNAPSHOT_BYTE_CAP = 512 * 1024 * 1024
_HOUR_ALLOC_CAP = 50_000_000

_ADV_CODE = {
    StrategyKind.NULL: 0,
    StrategyKind.PAIR_HAMMER: 1,
    StrategyKind.JUNTA_HAMMER: 2,
    StrategyKind.STALL_EPIDEMIC: 3,
    StrategyKind.LEADER_ISOLATION: 4,
}


@dataclass(frozen=True)
class Configuration:
    """A protocol plus one state per agent."""

    protocol: Protocol
    states: tuple

    @property
    def n(self) -> int:
        return len(self.states)

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError(f"population needs at least 2 agents, got {self.n}")
        for i, s in enumerate(self.states):
            if not self.protocol.state_ok(s):
                raise ValueError(f"agent {i} state {s!r} violates protocol ranges")
        if self.protocol.kind is ProtocolKind.JUNTA_CLOCK:
            if not any(s.in_junta for s in self.states):
                raise ValueError("junta clock configuration has no junta members")

    def leader_count(self) -> int:
        if self.protocol.kind is not ProtocolKind.LEADER_ELECTION:
            raise ValueError("leader_count applies to leader election only")
        return sum(1 for s in self.states if s.leader)

    def infected_count(self) -> int:
        if self.protocol.kind is not ProtocolKind.EPIDEMIC:
            raise ValueError("infected_count applies to the epidemic only")
        return sum(1 for s in self.states if s == 1)

    def hours(self) -> tuple[int, ...]:
        out = tuple(self.protocol.hour_of(s) for s in self.states)
        if out and out[0] is None:
            raise ValueError(f"{self.protocol.kind.value} has no hour")
        return out  # type: ignore[return-value]

    def max_hour(self) -> int:
        return max(self.hours())

    def min_hour(self) -> int:
        return min(self.hours())


def new_population(protocol: Protocol, n: int) -> Configuration:
    config = Configuration(protocol, protocol.initial_states(n))
    config.validate()
    return config


def derive_junta(n: int, seed: int, epsilon: float) -> frozenset[int]:
    """The trial's junta: a uniform subset of ceil(n^(1 - epsilon)) agents."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    size = min(n, math.ceil(n ** (1.0 - epsilon)))
    return SubstreamRng(seed).junta_members(n, size)


def apply_step(config: Configuration, sstep: ScheduleStep, mode: RandomnessMode) -> Configuration:
    """One transition, with full validation; the unit-step/replay entry point."""
    sstep.interaction.validate(config.n)
    ordered = mode is RandomnessMode.ORDERED_RANDOM
    if not ordered and sstep.coin is None:
        raise ValueError("Coin mode steps need a coin")
    if ordered and sstep.coin is not None:
        raise ValueError("OrderedRandom steps carry no coin")
    u = sstep.interaction.initiator
    v = sstep.interaction.responder
    new_u, new_v = config.protocol.transition(
        config.states[u], config.states[v], sstep.coin, ordered
    )
    states = list(config.states)
    states[u] = new_u
    states[v] = new_v
    return Configuration(config.protocol, tuple(states))


def replay_steps(
    config: Configuration, steps: Sequence[ScheduleStep], mode: RandomnessMode
) -> Configuration:
    for sstep in steps:
        config = apply_step(config, sstep, mode)
    return config


@dataclass(frozen=True)
class SnapshotSeries:
    """Periodic configurations, step 0 (the initial one) always included."""

    protocol: Protocol
    steps: tuple[int, ...]
    states: tuple[tuple, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def config_at(self, step: int) -> Configuration:
        for s, st in zip(self.steps, self.states):
            if s == step:
                return Configuration(self.protocol, st)
        raise KeyError(f"no snapshot at step {step}; have {self.steps[:8]}...")

    def last_at_or_before(self, step: int) -> tuple[int, Configuration]:
        best = None
        for s, st in zip(self.steps, self.states):
            if s <= step and (best is None or s > best[0]):
                best = (s, st)
        if best is None:
            raise KeyError(f"no snapshot at or before step {step}")
        return best[0], Configuration(self.protocol, best[1])


@dataclass(frozen=True)
class TrialResult:
    seed: int
    p: float
    mode: RandomnessMode
    strategy_label: str
    engine: str
    initial: Configuration
    final: Configuration
    metrics: TrialMetrics
    snapshots: SnapshotSeries
    trace: tuple[ScheduleStep, ...] | None


def run_trial(
    protocol: Protocol,
    n: int,
    *,
    seed: int,
    p: float,
    max_steps: int,
    mode: RandomnessMode = RandomnessMode.COIN,
    strategy: StrategySpec | AdversaryStrategy = StrategySpec(StrategyKind.NULL),
    stop_on_stabilize: bool = True,
    stop_after_rounds: int | None = None,
    stop_after_minute_events: int | None = None,
    snapshot_stride: int | None = None,
    trace: bool = False,
    engine: str = "auto",
    initial: Configuration | None = None,
) -> TrialResult:
    """Run one seeded trial to its step budget or stop condition.

    strategy is either a catalog StrategySpec (runnable on both engines) or
    any object with propose(), which forces the python engine.  initial
    replaces the protocol's fresh population, for resumed or crafted starts.
    """
    if max_steps < 0:
        raise ValueError(f"max_steps must be >= 0, got {max_steps}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if trace and max_steps > MAX_TRACE_STEPS:
        raise ValueError(
            f"tracing holds every step in memory; max_steps {max_steps} is over "
            f"the {MAX_TRACE_STEPS} cap"
        )
    if stop_after_rounds is not None:
        if stop_after_rounds < 1:
            raise ValueError(f"stop_after_rounds must be >= 1, got {stop_after_rounds}")
        if protocol.kind is ProtocolKind.EPIDEMIC:
            raise ValueError("the epidemic has no rounds to stop after")
    if stop_after_minute_events is not None:
        if stop_after_minute_events < 1:
            raise ValueError(
                f"stop_after_minute_events must be >= 1, got {stop_after_minute_events}"
            )
        if protocol.kind is not ProtocolKind.SMOOTHED_CLOCK:
            raise ValueError("minute-event stops are a clock-oracle facility")
    smoothing = SmoothingParams(p)

    if initial is None:
        config = new_population(protocol, n)
    else:
        if initial.protocol != protocol:
            raise ValueError("initial configuration was built for a different protocol")
        if initial.n != n:
            raise ValueError(f"initial configuration has n={initial.n}, expected {n}")
        initial.validate()
        config = initial

    spec: StrategySpec | None = strategy if isinstance(strategy, StrategySpec) else None
    if spec is not None:
        if not spec.compatible_with(protocol.kind):
            raise ValueError(
                f"strategy {spec.label()} does not apply to {protocol.kind.value}"
            )
        if spec.kind is StrategyKind.PAIR_HAMMER:
            if spec.a == spec.b or not (0 <= spec.a < n) or not (0 <= spec.b < n):
                raise ValueError(
                    f"PairHammer needs two distinct agents below n={n}, "
                    f"got ({spec.a}, {spec.b})"
                )

    if engine == "auto":
        engine = "compiled" if spec is not None else "python"
    if engine not in ("compiled", "python"):
        raise ValueError(f"engine must be auto, compiled, or python, got {engine!r}")
    if engine == "compiled" and spec is None:
        raise ValueError(
            "custom strategy objects run on the python engine only; "
            "pass engine='python' (or 'auto')"
        )

    if snapshot_stride is None:
        stride = max(1, max_steps // 1000)
    elif snapshot_stride == 0:
        stride = max_steps + 1  # never hit
    elif snapshot_stride > 0:
        stride = snapshot_stride
    else:
        raise ValueError(f"snapshot_stride must be >= 0, got {snapshot_stride}")

    if engine == "compiled":
        assert spec is not None
        return _run_compiled(
            config, smoothing, mode, spec, seed, max_steps,
            stop_on_stabilize, stop_after_rounds or 0, stop_after_minute_events or 0,
            stride, trace,
        )
    return _run_python(
        config, smoothing, mode, strategy, spec, seed, max_steps,
        stop_on_stabilize, stop_after_rounds or 0, stop_after_minute_events or 0,
        stride, trace,
    )


# -- pure-python path ---------------------------------------------------------


def _run_python(
    config: Configuration,
    smoothing: SmoothingParams,
    mode: RandomnessMode,
    strategy: StrategySpec | AdversaryStrategy,
    spec: StrategySpec | None,
    seed: int,
    max_steps: int,
    stop_on_stabilize: bool,
    stop_rounds: int,
    stop_mevents: int,
    stride: int,
    trace: bool,
) -> TrialResult:
    protocol = config.protocol
    kind = protocol.kind
    n = config.n
    ordered = mode is RandomnessMode.ORDERED_RANDOM
    rng = SubstreamRng(seed)
    strategy_obj = make_strategy(spec, rng, n) if spec is not None else strategy

    states = list(config.states)
    tracker = MetricsTracker(protocol, states, ordered)
    history: list[ScheduleStep] = []
    snap_steps: list[int] = [0]
    snap_states: list[tuple] = [config.states]

    run_steps = max_steps
    if kind is ProtocolKind.EPIDEMIC and tracker.epidemic_finish is not None:
        run_steps = 0
    if kind is ProtocolKind.LEADER_ELECTION and stop_on_stabilize:
        if tracker.leader_count <= 1:
            run_steps = 0
    if stop_rounds > 0 and tracker.rounds_complete >= stop_rounds:
        run_steps = 0

    for i in range(run_steps):
        obs = AdversaryObservation(i, Configuration(protocol, tuple(states)), history)
        sstep = next_interaction(strategy_obj, obs, smoothing, mode, rng)
        u = sstep.interaction.initiator
        v = sstep.interaction.responder
        old_u, old_v = states[u], states[v]
        new_u, new_v = protocol.transition(old_u, old_v, sstep.coin, ordered)
        states[u] = new_u
        states[v] = new_v
        tracker.observe_step(
            i, old_u, old_v, new_u, new_v,
            source_random=sstep.source is StepSource.RANDOM,
            coin=sstep.coin,
        )
        history.append(sstep)
        if (i + 1) % stride == 0:
            snap_steps.append(i + 1)
            snap_states.append(tuple(states))
        if kind is ProtocolKind.EPIDEMIC and tracker.epidemic_finish is not None:
            break
        if kind is ProtocolKind.LEADER_ELECTION and stop_on_stabilize:
            if tracker.leader_count == 1:
                break
        if stop_rounds > 0 and tracker.rounds_complete >= stop_rounds:
            break
        if stop_mevents > 0 and tracker.minute_events >= stop_mevents:
            break

    final = Configuration(protocol, tuple(states))
    return TrialResult(
        seed=seed,
        p=smoothing.p,
        mode=mode,
        strategy_label=_label_of(strategy, spec),
        engine="python",
        initial=config,
        final=final,
        metrics=tracker.finalize(),
        snapshots=SnapshotSeries(protocol, tuple(snap_steps), tuple(snap_states)),
        trace=tuple(history) if trace else None,
    )


def _label_of(strategy, spec: StrategySpec | None) -> str:
    if spec is not None:
        return spec.label()
    return f"custom:{type(strategy).__name__}"


# -- compiled path ------------------------------------------------------------


def _stream_bases(seed: int) -> np.ndarray:
    # index order is the kernels' REPL, PAIR, COIN, ORDER, ADV
    return np.array(
        [
            stream_base(seed, REPLACEMENT_STREAM),
            stream_base(seed, PAIR_STREAM),
            stream_base(seed, COIN_STREAM),
            stream_base(seed, ORDER_STREAM),
            stream_base(seed, ADVERSARY_STREAM),
        ],
        dtype=np.uint64,
    )


def _hour_capacity(kind: ProtocolKind, protocol: Protocol, initial_gmax: int, max_steps: int) -> int:
    """Upper bound (plus slack) for the highest hour a run can reach.

    Kernels index hour-count arrays without bounds checks, so these bounds
    must hold unconditionally.  A clock round needs at least M * S steps (each
    frontier-minute advance takes S initiator steps from a zeroed second
    counter; a resumed trial can bank at most one cheap advance), a junta hour
    needs m_const steps of max-minute growth, a leaderless hour M + 1 steps.
    """
    if kind in (ProtocolKind.SMOOTHED_CLOCK, ProtocolKind.LEADER_ELECTION):
        assert protocol.clock is not None
        per_round = protocol.clock.M * protocol.clock.S
    elif kind is ProtocolKind.JUNTA_CLOCK:
        per_round = protocol.m_const
    else:
        assert protocol.clock is not None
        per_round = protocol.clock.M + 1
    cap = initial_gmax + max_steps // per_round + 8
    if cap > _HOUR_ALLOC_CAP:
        raise ValueError(
            f"run could reach hour ~{cap}; refusing to allocate that much "
            "round bookkeeping (reduce max_steps or raise the clock constants)"
        )
    return cap


def _snapshot_rows(max_steps: int, stride: int, n: int, agent_bytes: int) -> int:
    rows = (max_steps // stride + 2) if stride <= max_steps else 1
    if rows * n * agent_bytes > _SNAPSHOT_BYTE_CAP:
        raise ValueError(
            f"snapshots would take {rows * n * agent_bytes >> 20} MiB; "
            "raise snapshot_stride or pass snapshot_stride=0"
        )
    return rows


def _run_compiled(
    config: Configuration,
    smoothing: SmoothingParams,
    mode: RandomnessMode,
    spec: StrategySpec,
    seed: int,
    max_steps: int,
    stop_on_stabilize: bool,
    stop_rounds: int,
    stop_mevents: int,
    stride: int,
    trace: bool,
) -> TrialResult:
    protocol = config.protocol
    kind = protocol.kind
    n = config.n
    ordered = mode is RandomnessMode.ORDERED_RANDOM
    draw_coins = not ordered

    bases = _stream_bases(seed)
    always, threshold = smoothing.replacement
    thr = np.uint64(threshold)
    adv_kind = _ADV_CODE[spec.kind]
    adv_a, adv_b, adv_alt = spec.a, spec.b, spec.alternate

    trace_cap = max_steps if trace else 1
    tr_init = np.empty(trace_cap, dtype=np.int32)
    tr_resp = np.empty(trace_cap, dtype=np.int32)
    tr_src = np.empty(trace_cap, dtype=np.int8)
    tr_coin = np.empty(trace_cap, dtype=np.int8)
    res = np.full(kernels.N_RESULTS, -1, dtype=np.int64)

    if kind is ProtocolKind.EPIDEMIC:
        x = np.array(config.states, dtype=np.int8)
        initial_infected = int((x == 1).sum())
        rows = _snapshot_rows(max_steps, stride, n, 1)
        snap_steps = np.empty(rows, dtype=np.int64)
        snap_x = np.empty((rows, n), dtype=np.int8)
        kernels.epidemic_kernel(
            bases, n, max_steps, always, thr, ordered, draw_coins,
            adv_kind, adv_a, adv_b, adv_alt,
            x,
            stride, snap_steps, snap_x,
            trace, tr_init, tr_resp, tr_src, tr_coin,
            res,
        )
        final_states = tuple(int(v) for v in x)
        snap_tuples = [
            tuple(int(v) for v in snap_x[k]) for k in range(int(res[kernels.R_SNAPS]))
        ]
        if initial_infected == n:
            finish = 0
        elif res[kernels.R_FINISH] >= 0:
            finish = int(res[kernels.R_FINISH])
        else:
            finish = None
        metrics = TrialMetrics(
            n=n,
            steps_executed=int(res[kernels.R_STEPS]),
            random_steps=int(res[kernels.R_RANDOM]),
            coin_steps=int(res[kernels.R_STEPS]) if draw_coins else 0,
            coin_heads=int(res[kernels.R_COIN_HEADS]),
            violations=int(res[kernels.R_VIOLATIONS]),
            max_hour=None,
            min_hour=None,
            rounds=(),
            minute_timelines=(),
            minute_events=0,
            frontier_minute=0,
            epidemic_finish=finish,
            stabilization=None,
            ticks_consumed=0,
            ticks_incremented=0,
        )
        return _package(
            config, smoothing, mode, spec, seed, final_states, metrics,
            snap_steps, snap_tuples, res, tr_init, tr_resp, tr_src, tr_coin, trace,
        )

    if kind is ProtocolKind.SMOOTHED_CLOCK:
        assert protocol.clock is not None
        clock = protocol.clock
        second = np.array([s.second for s in config.states], dtype=np.int32)
        minute = np.array([s.minute for s in config.states], dtype=np.int32)
        hour = np.array([s.hour for s in config.states], dtype=np.int64)
        initial_gmax = int(hour.max())
        initial_gmin = int(hour.min())
        cap = _hour_capacity(kind, protocol, initial_gmax, max_steps)
        cnt = np.zeros(cap, dtype=np.int64)
        r_end = np.empty(cap, dtype=np.int64)
        r_start = np.empty(cap, dtype=np.int64)
        timeline = np.full((TIMELINE_ROUNDS, clock.M + 1), -1, dtype=np.int64)
        rows = _snapshot_rows(max_steps, stride, n, 16)
        snap_steps = np.empty(rows, dtype=np.int64)
        snap_second = np.empty((rows, n), dtype=np.int32)
        snap_minute = np.empty((rows, n), dtype=np.int32)
        snap_hour = np.empty((rows, n), dtype=np.int64)
        kernels.smoothed_clock_kernel(
            bases, n, max_steps, always, thr, ordered,
            adv_kind, adv_a, adv_b, adv_alt,
            second, minute, hour,
            clock.S, clock.M, clock.hour_modulus or 0,
            cnt, r_end, r_start, timeline, initial_gmax,
            stop_rounds, stop_mevents,
            stride, snap_steps, snap_second, snap_minute, snap_hour,
            trace, tr_init, tr_resp, tr_src, tr_coin,
            res,
        )
        final_states = tuple(
            ClockState(int(second[j]), int(minute[j]), int(hour[j])) for j in range(n)
        )
        snap_tuples = [
            tuple(
                ClockState(int(snap_second[k, j]), int(snap_minute[k, j]), int(snap_hour[k, j]))
                for j in range(n)
            )
            for k in range(int(res[kernels.R_SNAPS]))
        ]
        metrics = _clock_metrics_from_kernel(
            protocol, n, draw_coins, res, r_end, r_start,
            timeline, None, initial_gmax, initial_gmin, clock.M,
            initial_leaders=None, final_leaders=None,
        )
        return _package(
            config, smoothing, mode, spec, seed, final_states, metrics,
            snap_steps, snap_tuples, res, tr_init, tr_resp, tr_src, tr_coin, trace,
        )

    if kind is ProtocolKind.JUNTA_CLOCK:
        minute = np.array([s.minute for s in config.states], dtype=np.int64)
        junta = np.array([1 if s.in_junta else 0 for s in config.states], dtype=np.int8)
        hours0 = minute // protocol.m_const
        initial_gmax = int(hours0.max())
        initial_gmin = int(hours0.min())
        cap = _hour_capacity(kind, protocol, initial_gmax, max_steps)
        cnt = np.zeros(cap, dtype=np.int64)
        r_end = np.empty(cap, dtype=np.int64)
        r_start = np.empty(cap, dtype=np.int64)
        rows = _snapshot_rows(max_steps, stride, n, 8)
        snap_steps = np.empty(rows, dtype=np.int64)
        snap_minute = np.empty((rows, n), dtype=np.int64)
        kernels.junta_clock_kernel(
            bases, n, max_steps, always, thr, ordered, draw_coins,
            adv_kind, adv_a, adv_b, adv_alt,
            minute, junta, protocol.m_const,
            cnt, r_end, r_start,
            stop_rounds,
            stride, snap_steps, snap_minute,
            trace, tr_init, tr_resp, tr_src, tr_coin,
            res,
        )
        in_junta = [bool(f) for f in junta]
        final_states = tuple(
            JuntaClockState(int(minute[j]), in_junta[j]) for j in range(n)
        )
        snap_tuples = [
            tuple(JuntaClockState(int(snap_minute[k, j]), in_junta[j]) for j in range(n))
            for k in range(int(res[kernels.R_SNAPS]))
        ]
        metrics = _clock_metrics_from_kernel(
            protocol, n, draw_coins, res, r_end, r_start,
            None, None, initial_gmax, initial_gmin, 0,
            initial_leaders=None, final_leaders=None,
        )
        return _package(
            config, smoothing, mode, spec, seed, final_states, metrics,
            snap_steps, snap_tuples, res, tr_init, tr_resp, tr_src, tr_coin, trace,
        )

    if kind is ProtocolKind.LEADERLESS_CLOCK:
        assert protocol.clock is not None
        hour = np.array([s.hour for s in config.states], dtype=np.int64)
        minute = np.array([s.minute for s in config.states], dtype=np.int32)
        initial_gmax = int(hour.max())
        initial_gmin = int(hour.min())
        cap = _hour_capacity(kind, protocol, initial_gmax, max_steps)
        cnt = np.zeros(cap, dtype=np.int64)
        r_end = np.empty(cap, dtype=np.int64)
        r_start = np.empty(cap, dtype=np.int64)
        rows = _snapshot_rows(max_steps, stride, n, 12)
        snap_steps = np.empty(rows, dtype=np.int64)
        snap_hour = np.empty((rows, n), dtype=np.int64)
        snap_minute = np.empty((rows, n), dtype=np.int32)
        kernels.leaderless_clock_kernel(
            bases, n, max_steps, always, thr, ordered, draw_coins,
            adv_kind, adv_a, adv_b, adv_alt,
            hour, minute, protocol.clock.M,
            cnt, r_end, r_start,
            stop_rounds,
            stride, snap_steps, snap_hour, snap_minute,
            trace, tr_init, tr_resp, tr_src, tr_coin,
            res,
        )
        final_states = tuple(
            LeaderlessClockState(int(hour[j]), int(minute[j])) for j in range(n)
        )
        snap_tuples = [
            tuple(
                LeaderlessClockState(int(snap_hour[k, j]), int(snap_minute[k, j]))
                for j in range(n)
            )
            for k in range(int(res[kernels.R_SNAPS]))
        ]
        metrics = _clock_metrics_from_kernel(
            protocol, n, draw_coins, res, r_end, r_start,
            None, None, initial_gmax, initial_gmin, 0,
            initial_leaders=None, final_leaders=None,
        )
        return _package(
            config, smoothing, mode, spec, seed, final_states, metrics,
            snap_steps, snap_tuples, res, tr_init, tr_resp, tr_src, tr_coin, trace,
        )

    assert kind is ProtocolKind.LEADER_ELECTION
    assert protocol.clock is not None and protocol.leader is not None
    clock = protocol.clock
    second = np.array([s.clock.second for s in config.states], dtype=np.int32)
    minute = np.array([s.clock.minute for s in config.states], dtype=np.int32)
    hour = np.array([s.clock.hour for s in config.states], dtype=np.int64)
    level = np.array([s.level for s in config.states], dtype=np.int32)
    leader = np.array([1 if s.leader else 0 for s in config.states], dtype=np.int8)
    tick = np.array([1 if s.tick else 0 for s in config.states], dtype=np.int8)
    initial_leaders = int(leader.sum())
    initial_gmax = int(hour.max())
    initial_gmin = int(hour.min())
    cap = _hour_capacity(kind, protocol, initial_gmax, max_steps)
    cnt = np.zeros(cap, dtype=np.int64)
    r_end = np.empty(cap, dtype=np.int64)
    r_start = np.empty(cap, dtype=np.int64)
    leaders_at_end = np.empty(cap, dtype=np.int64)
    timeline = np.full((TIMELINE_ROUNDS, clock.M + 1), -1, dtype=np.int64)
    rows = _snapshot_rows(max_steps, stride, n, 22)
    snap_steps = np.empty(rows, dtype=np.int64)
    snap_second = np.empty((rows, n), dtype=np.int32)
    snap_minute = np.empty((rows, n), dtype=np.int32)
    snap_hour = np.empty((rows, n), dtype=np.int64)
    snap_level = np.empty((rows, n), dtype=np.int32)
    snap_leader = np.empty((rows, n), dtype=np.int8)
    snap_tick = np.empty((rows, n), dtype=np.int8)
    kernels.leader_kernel(
        bases, n, max_steps, always, thr, ordered,
        adv_kind, adv_a, adv_b, adv_alt,
        second, minute, hour, level, leader, tick,
        clock.S, clock.M, clock.hour_modulus or 0,
        protocol.leader.ell_max, protocol.leader.amended_two_leader,
        cnt, r_end, r_start, timeline, initial_gmax, leaders_at_end,
        stop_on_stabilize, stop_rounds,
        stride, snap_steps, snap_second, snap_minute, snap_hour,
        snap_level, snap_leader, snap_tick,
        trace, tr_init, tr_resp, tr_src, tr_coin,
        res,
    )

    def _leader_state(k: int | None, j: int) -> LeaderState:
        if k is None:
            return LeaderState(
                leader=bool(leader[j]),
                level=int(level[j]),
                tick=bool(tick[j]),
                clock=ClockState(int(second[j]), int(minute[j]), int(hour[j])),
            )
        return LeaderState(
            leader=bool(snap_leader[k, j]),
            level=int(snap_level[k, j]),
            tick=bool(snap_tick[k, j]),
            clock=ClockState(
                int(snap_second[k, j]), int(snap_minute[k, j]), int(snap_hour[k, j])
            ),
        )

    final_states = tuple(_leader_state(None, j) for j in range(n))
    snap_tuples = [
        tuple(_leader_state(k, j) for j in range(n))
        for k in range(int(res[kernels.R_SNAPS]))
    ]
    metrics = _clock_metrics_from_kernel(
        protocol, n, draw_coins, res, r_end, r_start,
        timeline, leaders_at_end, initial_gmax, initial_gmin, clock.M,
        initial_leaders=initial_leaders, final_leaders=int(leader.sum()),
    )
    return _package(
        config, smoothing, mode, spec, seed, final_states, metrics,
        snap_steps, snap_tuples, res, tr_init, tr_resp, tr_src, tr_coin, trace,
    )


def _clock_metrics_from_kernel(
    protocol: Protocol,
    n: int,
    draw_coins: bool,
    res: np.ndarray,
    r_end: np.ndarray,
    r_start: np.ndarray,
    timeline: np.ndarray | None,
    leaders_at_end: np.ndarray | None,
    initial_gmax: int,
    initial_gmin: int,
    minutes_m: int,
    *,
    initial_leaders: int | None,
    final_leaders: int | None,
) -> TrialMetrics:
    steps = int(res[kernels.R_STEPS])
    n_end = int(res[kernels.R_N_END])
    n_start = int(res[kernels.R_N_START])
    end_steps = [int(v) for v in r_end[:n_end]]
    start_steps = [int(v) for v in r_start[:n_start]]
    has_minutes = timeline is not None

    timelines = ()
    if has_minutes:
        raw = [
            [int(v) if v >= 0 else None for v in timeline[row]]
            for row in range(timeline.shape[0])
        ]
        timelines = assemble_timelines(
            raw, initial_gmax, int(res[kernels.R_GMAX]), end_steps, minutes_m
        )

    stab_report = None
    if leaders_at_end is not None:
        assert initial_leaders is not None and final_leaders is not None
        if initial_leaders == 1:
            stab_steps = 0
        elif res[kernels.R_STAB] >= 0:
            stab_steps = int(res[kernels.R_STAB])
        else:
            stab_steps = None
        if initial_leaders == 0:
            zero = 0
        elif res[kernels.R_ZERO] >= 0:
            zero = int(res[kernels.R_ZERO])
        else:
            zero = None
        stab_report = StabilizationReport(
            initial_leaders=initial_leaders,
            final_leaders=final_leaders,
            stabilization_steps=stab_steps,
            zero_leader_step=zero,
            leaders_at_round_ends=tuple(int(v) for v in leaders_at_end[:n_end]),
        )

    is_leader = protocol.kind is ProtocolKind.LEADER_ELECTION
    return TrialMetrics(
        n=n,
        steps_executed=steps,
        random_steps=int(res[kernels.R_RANDOM]),
        coin_steps=steps if draw_coins else 0,
        coin_heads=int(res[kernels.R_COIN_HEADS]),
        violations=int(res[kernels.R_VIOLATIONS]),
        max_hour=int(res[kernels.R_GMAX]),
        min_hour=int(res[kernels.R_GMIN]),
        rounds=assemble_rounds(initial_gmax, initial_gmin, end_steps, start_steps),
        minute_timelines=timelines,
        minute_events=int(res[kernels.R_MEVENTS]) if has_minutes else 0,
        frontier_minute=int(res[kernels.R_MPRIME]) if has_minutes else 0,
        epidemic_finish=None,
        stabilization=stab_report,
        ticks_consumed=int(res[kernels.R_TICKS_CONSUMED]) if is_leader else 0,
        ticks_incremented=int(res[kernels.R_TICKS_INCREMENTED]) if is_leader else 0,
    )


def _package(
    config: Configuration,
    smoothing: SmoothingParams,
    mode: RandomnessMode,
    spec: StrategySpec,
    seed: int,
    final_states: tuple,
    metrics: TrialMetrics,
    snap_steps: np.ndarray,
    snap_tuples: list[tuple],
    res: np.ndarray,
    tr_init: np.ndarray,
    tr_resp: np.ndarray,
    tr_src: np.ndarray,
    tr_coin: np.ndarray,
    trace: bool,
) -> TrialResult:
    protocol = config.protocol
    n_snaps = int(res[kernels.R_SNAPS])
    steps = (0, *(int(snap_steps[k]) + 1 for k in range(n_snaps)))
    snapshots = SnapshotSeries(protocol, steps, (config.states, *snap_tuples))

    trace_steps = None
    if trace:
        n_trace = int(res[kernels.R_TRACE])
        trace_steps = tuple(
            ScheduleStep(
                step_index=k,
                interaction=Interaction(int(tr_init[k]), int(tr_resp[k])),
                source=StepSource.RANDOM if tr_src[k] == 0 else StepSource.ADVERSARIAL,
                coin=None if tr_coin[k] < 0 else int(tr_coin[k]),
            )
            for k in range(n_trace)
        )

    return TrialResult(
        seed=seed,
        p=smoothing.p,
        mode=mode,
        strategy_label=spec.label(),
        engine="compiled",
        initial=config,
        final=Configuration(protocol, final_states),
        metrics=metrics,
        snapshots=snapshots,
        trace=trace_steps,
    )
