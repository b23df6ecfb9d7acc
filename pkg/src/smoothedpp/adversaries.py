"""Adaptive adversary strategies.

A strategy sees the live configuration and the executed history and proposes
the next pair (ordered in Coin mode, unordered otherwise).  The catalog here
covers the attacks the experiments need; anything else can implement the same
propose() shape and run on the pure-Python engine.

Ties are broken by agent index, lowest first, so strategies are deterministic
functions of the observation and their own query count.  The compiled kernels
restate each strategy incrementally; the differential tests hold the two
implementations together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .protocols import JuntaClockState, LeaderState, ProtocolKind
from .schedulers import AdversaryObservation
from .rng import SubstreamRng


class StrategyKind(Enum):
    NULL = "Null"
    PAIR_HAMMER = "PairHammer"
    JUNTA_HAMMER = "JuntaHammer"
    STALL_EPIDEMIC = "StallEpidemic"
    LEADER_ISOLATION = "LeaderIsolation"


@dataclass(frozen=True, slots=True)
class StrategySpec:
    """Declarative strategy choice, as it appears in configs and summary rows."""

    kind: StrategyKind
    a: int = 0
    b: int = 1
    alternate: bool = False

    def label(self) -> str:
        if self.kind is StrategyKind.PAIR_HAMMER:
            suffix = ",alternating" if self.alternate else ""
            return f"PairHammer({self.a},{self.b}{suffix})"
        return self.kind.value

    @staticmethod
    def from_label(text: str) -> StrategySpec:
        if text.startswith("PairHammer(") and text.endswith(")"):
            body = text[len("PairHammer(") : -1]
            parts = body.split(",")
            alternate = False
            if parts and parts[-1] == "alternating":
                alternate = True
                parts = parts[:-1]
            if len(parts) != 2:
                raise ValueError(f"malformed strategy label {text!r}")
            return StrategySpec(
                StrategyKind.PAIR_HAMMER, int(parts[0]), int(parts[1]), alternate
            )
        for kind in StrategyKind:
            if text == kind.value:
                return StrategySpec(kind)
        raise ValueError(f"unknown strategy label {text!r}")

    def compatible_with(self, protocol: ProtocolKind) -> bool:
        if self.kind is StrategyKind.JUNTA_HAMMER:
            return protocol is ProtocolKind.JUNTA_CLOCK
        if self.kind is StrategyKind.STALL_EPIDEMIC:
            return protocol is ProtocolKind.EPIDEMIC
        if self.kind is StrategyKind.LEADER_ISOLATION:
            return protocol is ProtocolKind.LEADER_ELECTION
        return True


@dataclass
class NullStrategy:
    """Proposes uniform ordered pairs from its own substream.

    Statistically indistinguishable from the replacement draw, so the
    scheduler behaves like the fully uniform one at any p.
    """

    rng: SubstreamRng

    def propose(self, obs: AdversaryObservation) -> tuple[int, int]:
        return self.rng.adversary_pair(obs.step_index, obs.config.n)


@dataclass(frozen=True)
class PairHammerStrategy:
    """Always the same two agents; optionally alternating the orientation.

    Alternation follows the parity of the step index, so a proposal depends
    only on the observation.
    """

    a: int
    b: int
    alternate: bool = False

    def propose(self, obs: AdversaryObservation) -> tuple[int, int]:
        flipped = self.alternate and (obs.step_index & 1) == 1
        return (self.b, self.a) if flipped else (self.a, self.b)


@dataclass
class JuntaHammerStrategy:
    """Hammers the two lowest-index junta members, alternating orientation.

    The junta rule only moves the initiator, so alternation (on step parity)
    is what turns the pair into a two-agent ratchet whose max minute grows
    every proposal.  Junta membership never changes, so the pair is cached
    after the first look at the configuration.
    """

    _pair: tuple[int, int] | None = field(default=None)
    _alternating: bool = field(default=True)

    def propose(self, obs: AdversaryObservation) -> tuple[int, int]:
        if self._pair is None:
            members = [
                i
                for i, st in enumerate(obs.config.states)
                if isinstance(st, JuntaClockState) and st.in_junta
            ]
            if len(members) >= 2:
                self._pair = (members[0], members[1])
            elif members:
                # degenerate single-member junta: hammer it against a fixed
                # partner, orientation held so the member stays initiator
                other = 0 if members[0] != 0 else 1
                self._pair = (members[0], other)
                self._alternating = False
            else:
                self._pair = (0, 1)
                self._alternating = False
        a, b = self._pair
        flipped = self._alternating and (obs.step_index & 1) == 1
        return (b, a) if flipped else (a, b)


class StallEpidemicStrategy:
    """Keeps infection where it already is.

    Proposes the two lowest infected agents when at least two exist, else the
    two lowest susceptible ones, else agents 0 and 1 (only reachable at n = 2
    with one agent infected).  Within a proposal the lower index initiates.
    """

    def propose(self, obs: AdversaryObservation) -> tuple[int, int]:
        infected = []
        susceptible = []
        for i, x in enumerate(obs.config.states):
            if x == 1:
                if len(infected) < 2:
                    infected.append(i)
            elif len(susceptible) < 2:
                susceptible.append(i)
        if len(infected) >= 2:
            return infected[0], infected[1]
        if len(susceptible) >= 2:
            return susceptible[0], susceptible[1]
        return 0, 1


class LeaderIsolationStrategy:
    """Wastes steps on followers, never putting two leaders in contact.

    Preferred proposal: among levels shared by at least two followers, the
    pair whose first member has the lowest index (partner: the lowest other
    follower at that level), which delays both level propagation and pairwise
    elimination.  Fallbacks: the two lowest followers, then agents 0 and 1.
    """

    def propose(self, obs: AdversaryObservation) -> tuple[int, int]:
        lowest_two: dict[int, list[int]] = {}
        followers = []
        for i, st in enumerate(obs.config.states):
            assert isinstance(st, LeaderState)
            if st.leader:
                continue
            if len(followers) < 2:
                followers.append(i)
            bucket = lowest_two.setdefault(st.level, [])
            if len(bucket) < 2:
                bucket.append(i)
        best: list[int] | None = None
        for bucket in lowest_two.values():
            if len(bucket) == 2 and (best is None or bucket[0] < best[0]):
                best = bucket
        if best is not None:
            return best[0], best[1]
        if len(followers) == 2:
            return followers[0], followers[1]
        return 0, 1


def make_strategy(spec: StrategySpec, rng: SubstreamRng, n: int):
    """Instantiate a catalog strategy for one trial."""
    if spec.kind is StrategyKind.PAIR_HAMMER:
        if spec.a == spec.b or not (0 <= spec.a < n) or not (0 <= spec.b < n):
            raise ValueError(
                f"PairHammer needs two distinct agents below n={n}, got ({spec.a}, {spec.b})"
            )
        return PairHammerStrategy(spec.a, spec.b, spec.alternate)
    if spec.kind is StrategyKind.NULL:
        return NullStrategy(rng)
    if spec.kind is StrategyKind.JUNTA_HAMMER:
        return JuntaHammerStrategy()
    if spec.kind is StrategyKind.STALL_EPIDEMIC:
        return StallEpidemicStrategy()
    if spec.kind is StrategyKind.LEADER_ISOLATION:
        return LeaderIsolationStrategy()
    raise ValueError(f"unhandled strategy kind {spec.kind}")
