"""Protocol state types and pure transition functions.

Five protocols share the same interaction shape: an ordered pair (initiator u,
responder v) and, in Coin mode, one unbiased bit.  Transitions are pure: they
take the two pre-step states and return the two post-step states.  The engine
(and its compiled twin in kernels.py) applies them; nothing here draws
randomness or mutates.

Clock terminology: each agent runs a second/minute/hour counter.  Seconds
advance on coin runs (Coin mode) or initiator streaks (Ordered mode), S seconds
roll into a minute, M minutes into an hour, and (hour, minute) spread through
the population by the initiator adopting from a responder that is ahead.  Hours
are unbounded by default; an optional modulus wraps comparisons in a window of
half the modulus while the true hour is kept alongside for measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


class ProtocolKind(Enum):
    EPIDEMIC = "Epidemic"
    SMOOTHED_CLOCK = "SmoothedClock"
    JUNTA_CLOCK = "JuntaClock"
    LEADERLESS_CLOCK = "LeaderlessClock"
    LEADER_ELECTION = "LeaderElection"


def ceil_log2(x: int) -> int:
    """Smallest k with 2**k >= x, for integer x >= 1."""
    if x < 1:
        raise ValueError(f"ceil_log2 needs x >= 1, got {x}")
    return (x - 1).bit_length()


@dataclass(frozen=True, slots=True)
class ClockParams:
    """Counter thresholds for the phase clock (and its embedding in leader election)."""

    S: int
    M: int
    hour_modulus: int | None = None

    def __post_init__(self) -> None:
        if self.S < 1 or self.M < 1:
            raise ValueError(f"S and M must be positive, got S={self.S} M={self.M}")
        if self.hour_modulus is not None and self.hour_modulus < 2:
            raise ValueError(f"hour_modulus must be >= 2, got {self.hour_modulus}")


def derive_clock_params(
    n: int,
    p: float,
    c: int = 3,
    c_m: int = 8,
    hour_modulus: int | None = None,
) -> ClockParams:
    """Second/minute thresholds for population size n and replacement rate p.

    S = ceil(log2(n / p)) + ceil(log2(ceil(log2 n))) + c  and  M = c_m * ceil(log2 n).
    The slack constant c must be at least 3: the run-length union bound that
    makes a minute survive long enough has failure weight c * 2^-c, which is
    only a useful bound from 3 up.
    """
    if n < 2:
        raise ValueError(f"population size must be >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"replacement rate must be in (0, 1], got {p}")
    if c < 3:
        raise ValueError(f"slack constant c must be >= 3, got {c}")
    if c_m < 1:
        raise ValueError(f"c_m must be >= 1, got {c_m}")
    log_n = ceil_log2(n)
    log_n_over_p = math.ceil(math.log2(n) - math.log2(p))
    s = log_n_over_p + ceil_log2(max(log_n, 1)) + c
    return ClockParams(S=s, M=c_m * log_n, hour_modulus=hour_modulus)


@dataclass(frozen=True, slots=True)
class ClockState:
    second: int = 0
    minute: int = 0
    hour: int = 0


def hour_compare(hu: int, hv: int, modulus: int | None) -> int:
    """-1 if v is ahead, 0 if even, +1 if u is ahead.

    Without a modulus this is plain integer comparison of the true hours.
    With one, the comparison is taken on residues in a window of modulus/2,
    which matches the true comparison whenever the population's hour spread
    is below half the modulus (an exact half-gap counts as u ahead).
    """
    if modulus is None:
        return (hu > hv) - (hu < hv)
    d = (hv - hu) % modulus
    if d == 0:
        return 0
    return -1 if 2 * d < modulus else 1


# --- one-way epidemic (x, y) -> (x, max(x, y)) ---------------------------------


def epidemic_step(x_u: int, x_v: int) -> tuple[int, int]:
    """Initiator keeps its value; the responder takes the max of the two."""
    return x_u, max(x_u, x_v)


# --- smoothed phase clock -------------------------------------------------------


def smoothed_clock_step(
    u: ClockState, v: ClockState, coin: int, params: ClockParams
) -> tuple[ClockState, ClockState]:
    """Coin-mode clock transition. Only the initiator changes.

    Heads extend the initiator's second run, tails reset it; S seconds roll
    into a minute and M minutes into an hour; then the initiator adopts the
    responder's (hour, minute) if behind.  The two adoption tests are
    sequential: an agent that just adopted a later hour goes on to adopt that
    hour's minute in the same step.
    """
    second, minute, hour = u.second, u.minute, u.hour
    if coin:
        second += 1
    else:
        second = 0
    if second == params.S:
        minute += 1
        second = 0
    if minute == params.M:
        hour += 1
        minute = 0
    cmp = hour_compare(hour, v.hour, params.hour_modulus)
    if cmp < 0:
        hour = v.hour
        minute = 0
        second = 0
        cmp = 0
    if cmp == 0 and minute < v.minute:
        minute = v.minute
        second = 0
    return ClockState(second, minute, hour), v


def smoothed_clock_step_ordered(
    u: ClockState, v: ClockState, params: ClockParams
) -> tuple[ClockState, ClockState]:
    """Ordered-mode clock transition: no coin; initiator streaks play its role.

    The initiator extends its second run and the responder's run is reset, so
    an agent advances a minute after S consecutive interactions as initiator.
    Rollover and adoption are as in the coin-mode step.
    """
    second, minute, hour = u.second + 1, u.minute, u.hour
    if second == params.S:
        minute += 1
        second = 0
    if minute == params.M:
        hour += 1
        minute = 0
    cmp = hour_compare(hour, v.hour, params.hour_modulus)
    if cmp < 0:
        hour = v.hour
        minute = 0
        second = 0
        cmp = 0
    if cmp == 0 and minute < v.minute:
        minute = v.minute
        second = 0
    return ClockState(second, minute, hour), replace(v, second=0)


# --- baseline clocks ------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class JuntaClockState:
    minute: int = 0
    in_junta: bool = False


def junta_clock_step(
    u: JuntaClockState, v: JuntaClockState
) -> tuple[JuntaClockState, JuntaClockState]:
    """Junta-driven clock: junta members push the max forward, others follow.

    The initiator takes max(u.minute, v.minute + 1) if it belongs to the junta
    and max(u.minute, v.minute) otherwise; the responder is unchanged.  The
    derived hour is minute // M_const, taken by the caller.
    """
    if u.in_junta:
        minute = max(u.minute, v.minute + 1)
    else:
        minute = max(u.minute, v.minute)
    return replace(u, minute=minute), v


@dataclass(frozen=True, slots=True)
class LeaderlessClockState:
    hour: int = 0
    minute: int = 0


def leaderless_clock_step(
    u: LeaderlessClockState, v: LeaderlessClockState, m: int
) -> tuple[LeaderlessClockState, LeaderlessClockState]:
    """Leaderless baseline: adopt a later hour, else tick the own minute counter.

    The initiator adopts (v.hour, 0) when behind; at minute == m it rolls over
    to (hour + 1, 0); otherwise it increments its minute.  Responder unchanged.
    """
    if u.hour < v.hour:
        return LeaderlessClockState(v.hour, 0), v
    if u.minute == m:
        return LeaderlessClockState(u.hour + 1, 0), v
    return LeaderlessClockState(u.hour, u.minute + 1), v


# --- leader election on top of the clock ----------------------------------------


@dataclass(frozen=True, slots=True)
class LeaderParams:
    ell_max: int
    amended_two_leader: bool = True

    def __post_init__(self) -> None:
        if self.ell_max < 1:
            raise ValueError(f"ell_max must be >= 1, got {self.ell_max}")


def derive_leader_params(n: int, c_l: int = 4, amended_two_leader: bool = True) -> LeaderParams:
    if n < 2:
        raise ValueError(f"population size must be >= 2, got {n}")
    if c_l < 1:
        raise ValueError(f"c_l must be >= 1, got {c_l}")
    return LeaderParams(ell_max=c_l * ceil_log2(n), amended_two_leader=amended_two_leader)


@dataclass(frozen=True, slots=True)
class LeaderState:
    leader: bool
    level: int
    tick: bool
    clock: ClockState

    @staticmethod
    def initial(leader: bool = True) -> LeaderState:
        return LeaderState(leader=leader, level=0, tick=False, clock=ClockState())


def _leader_core(
    u_leader: bool,
    u_level: int,
    u_tick: bool,
    v_level: int,
    tick_heads: bool,
    ell_max: int,
) -> tuple[bool, int, bool]:
    """Shared leader lines: level epidemic, then initiator tick consumption.

    Returns the initiator's (leader, level, tick) before the two-leader rule.
    tick_heads tells whether a consumed tick increments the level: the coin in
    Coin mode, unconditionally true in Ordered mode (acting as initiator is
    the heads outcome there).
    """
    if u_level < v_level:
        u_leader = False
        u_level = v_level
    if u_tick and u_leader:
        u_tick = False
        if tick_heads:
            u_level = min(u_level + 1, ell_max)
    return u_leader, u_level, u_tick


def leader_election_step(
    u: LeaderState,
    v: LeaderState,
    coin: int,
    params: LeaderParams,
    clock_params: ClockParams,
) -> tuple[LeaderState, LeaderState]:
    """Coin-mode leader election step (clock embedded; the step's one coin is
    shared by the clock walk and the level flip).

    After the clock advance: (1) the initiator adopts the responder's level
    when behind, losing leadership; (2) a leading initiator with a raised tick
    consumes it and increments its level on heads, capped at ell_max; (3) if
    both are still leaders, the two-leader rule fires.  The amended rule
    demotes the strictly-lower one (the responder may change here) and lifts
    the demoted agent's level to the max of the two; on a tie the initiator
    is demoted.  The literal rule demotes the initiator unconditionally.
    A tick is raised when the initiator's hour increases, after consumption,
    so it becomes consumable from the next interaction on.
    """
    clock_u, _ = smoothed_clock_step(u.clock, v.clock, coin, clock_params)
    u_leader, u_level, u_tick = _leader_core(
        u.leader, u.level, u.tick, v.level, bool(coin), params.ell_max
    )
    v_leader, v_level = v.leader, v.level
    if u_leader and v_leader:
        if params.amended_two_leader:
            if u_level > v_level:
                v_leader = False
                v_level = u_level
            else:
                u_leader = False
        else:
            u_leader = False
    if clock_u.hour > u.clock.hour or (
        clock_params.hour_modulus is not None and clock_u.hour != u.clock.hour
    ):
        u_tick = True
    new_u = LeaderState(u_leader, u_level, u_tick, clock_u)
    new_v = LeaderState(v_leader, v_level, v.tick, v.clock)
    return new_u, new_v


def leader_election_step_ordered(
    u: LeaderState,
    v: LeaderState,
    params: LeaderParams,
    clock_params: ClockParams,
) -> tuple[LeaderState, LeaderState]:
    """Ordered-mode leader election step.

    The clock is the ordered variant; a leading initiator that consumes its
    tick always increments (being the initiator is the fair bit), while a
    responder's raised tick is cleared with no increment.  The two-leader tie
    demotes the responder in this mode.
    """
    clock_u, clock_v = smoothed_clock_step_ordered(u.clock, v.clock, clock_params)
    u_leader, u_level, u_tick = _leader_core(
        u.leader, u.level, u.tick, v.level, True, params.ell_max
    )
    v_leader, v_level = v.leader, v.level
    v_tick = False  # a responder's raised tick is cleared, with no increment
    if u_leader and v_leader:
        if params.amended_two_leader:
            v_leader = False
            v_level = max(u_level, v_level)
        else:
            v_leader = False
    if clock_u.hour > u.clock.hour or (
        clock_params.hour_modulus is not None and clock_u.hour != u.clock.hour
    ):
        u_tick = True
    new_u = LeaderState(u_leader, u_level, u_tick, clock_u)
    new_v = LeaderState(v_leader, v_level, v_tick, clock_v)
    return new_u, new_v


@dataclass(frozen=True)
class Protocol:
    """A protocol kind bundled with everything needed to run and observe it.

    junta and initial_leaders are explicit agent sets so a trial is fully
    determined by this object plus the schedule; the engine derives the junta
    from the trial seed before building one of these.  initial_leaders=None
    means every agent starts as a leader.
    """

    kind: ProtocolKind
    clock: ClockParams | None = None
    leader: LeaderParams | None = None
    m_const: int = 8
    junta: frozenset[int] | None = None
    source: int = 0
    initial_leaders: frozenset[int] | None = None

    def __post_init__(self) -> None:
        needs_clock = self.kind in (
            ProtocolKind.SMOOTHED_CLOCK,
            ProtocolKind.LEADERLESS_CLOCK,
            ProtocolKind.LEADER_ELECTION,
        )
        if needs_clock and self.clock is None:
            raise ValueError(f"{self.kind.value} needs ClockParams")
        if self.kind is ProtocolKind.LEADER_ELECTION and self.leader is None:
            raise ValueError("LeaderElection needs LeaderParams")
        if self.kind is ProtocolKind.JUNTA_CLOCK:
            if self.junta is None or len(self.junta) < 1:
                raise ValueError("JuntaClock needs a nonempty junta set")
            if self.m_const < 1:
                raise ValueError(f"m_const must be >= 1, got {self.m_const}")

    def initial_states(self, n: int) -> tuple:
        if self.kind is ProtocolKind.EPIDEMIC:
            if not 0 <= self.source < n:
                raise ValueError(f"epidemic source {self.source} out of range for n={n}")
            return tuple(1 if i == self.source else 0 for i in range(n))
        if self.kind is ProtocolKind.SMOOTHED_CLOCK:
            return tuple(ClockState() for _ in range(n))
        if self.kind is ProtocolKind.JUNTA_CLOCK:
            assert self.junta is not None
            if any(not 0 <= j < n for j in self.junta):
                raise ValueError(f"junta member out of range for n={n}")
            return tuple(JuntaClockState(0, i in self.junta) for i in range(n))
        if self.kind is ProtocolKind.LEADERLESS_CLOCK:
            return tuple(LeaderlessClockState() for _ in range(n))
        leaders = self.initial_leaders
        if leaders is not None and any(not 0 <= j < n for j in leaders):
            raise ValueError(f"initial leader out of range for n={n}")
        return tuple(
            LeaderState.initial(leaders is None or i in leaders) for i in range(n)
        )

    def transition(self, u, v, coin: int | None, ordered: bool) -> tuple:
        if self.kind is ProtocolKind.EPIDEMIC:
            return epidemic_step(u, v)
        if self.kind is ProtocolKind.SMOOTHED_CLOCK:
            assert self.clock is not None
            if ordered:
                return smoothed_clock_step_ordered(u, v, self.clock)
            return smoothed_clock_step(u, v, coin or 0, self.clock)
        if self.kind is ProtocolKind.JUNTA_CLOCK:
            return junta_clock_step(u, v)
        if self.kind is ProtocolKind.LEADERLESS_CLOCK:
            assert self.clock is not None
            return leaderless_clock_step(u, v, self.clock.M)
        assert self.clock is not None and self.leader is not None
        if ordered:
            return leader_election_step_ordered(u, v, self.leader, self.clock)
        return leader_election_step(u, v, coin or 0, self.leader, self.clock)

    def hour_of(self, state) -> int | None:
        if self.kind is ProtocolKind.SMOOTHED_CLOCK:
            return state.hour
        if self.kind is ProtocolKind.JUNTA_CLOCK:
            return state.minute // self.m_const
        if self.kind is ProtocolKind.LEADERLESS_CLOCK:
            return state.hour
        if self.kind is ProtocolKind.LEADER_ELECTION:
            return state.clock.hour
        return None

    def minute_of(self, state) -> int | None:
        """The minute that feeds the frontier watermark; None when there is none."""
        if self.kind is ProtocolKind.SMOOTHED_CLOCK:
            return state.minute
        if self.kind is ProtocolKind.LEADER_ELECTION:
            return state.clock.minute
        return None

    def state_ok(self, state) -> bool:
        """Range invariants every reachable state must satisfy."""
        if self.kind is ProtocolKind.EPIDEMIC:
            return state in (0, 1)
        if self.kind is ProtocolKind.SMOOTHED_CLOCK:
            assert self.clock is not None
            # hour stays a true count even under hour_modulus; only comparisons wrap
            return (
                0 <= state.second < self.clock.S
                and 0 <= state.minute < self.clock.M
                and state.hour >= 0
            )
        if self.kind is ProtocolKind.JUNTA_CLOCK:
            return state.minute >= 0
        if self.kind is ProtocolKind.LEADERLESS_CLOCK:
            assert self.clock is not None
            return state.hour >= 0 and 0 <= state.minute <= self.clock.M
        assert self.clock is not None and self.leader is not None
        return (
            0 <= state.clock.second < self.clock.S
            and 0 <= state.clock.minute < self.clock.M
            and state.clock.hour >= 0
            and 0 <= state.level <= self.leader.ell_max
        )


def tick_consumption(
    u: LeaderState,
    v: LeaderState,
    coin: int | None,
    params: LeaderParams,
    ordered: bool,
) -> tuple[int, int]:
    """(ticks consumed, level increments produced) by one interaction.

    A consumption is a raised tick cleared while its owner holds leader status
    at the consumption check: the initiator route requires leadership by the
    algorithm, and responder-route clears (Ordered mode) count only when the
    responder is a leader, since only those could ever have incremented.  Used
    by the engines for the fairness accounting; pure recomputation from the
    pre-step states, no state change.
    """
    consumed = 0
    incremented = 0
    u_led_after_epidemic = u.leader and not (u.level < v.level)
    if u.tick and u_led_after_epidemic:
        consumed += 1
        heads = True if ordered else bool(coin)
        if heads and u.level < params.ell_max:
            incremented += 1
    if ordered and v.tick and v.leader:
        consumed += 1
    return consumed, incremented
