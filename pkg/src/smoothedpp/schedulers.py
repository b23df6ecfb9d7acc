"""Interaction scheduling under the smoothed adversary model.

Each step the adversary is asked for a proposal; with probability p the
proposal is discarded and a uniform ordered pair is used instead.  The
adversary is queried even on replaced steps, so its internal state (and its
view of history) evolves identically whether or not its choices survive; at
p = 1 that makes every strategy produce exactly the uniform schedule.

Two randomness modes exist.  In Coin mode the adversary controls the order of
its pair and every executed step carries one unbiased coin for the protocol.
In OrderedRandom mode proposals are unordered, the engine draws the
initiator/responder orientation itself, and no coin exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Protocol as TypingProtocol, Sequence

from .rng import StreamCursor, SubstreamRng, pair_from_u64, replacement_threshold

if TYPE_CHECKING:
    from .engine import Configuration


class RandomnessMode(Enum):
    COIN = "Coin"
    ORDERED_RANDOM = "OrderedRandom"


class StepSource(Enum):
    RANDOM = "Random"
    ADVERSARIAL = "Adversarial"


@dataclass(frozen=True, slots=True)
class Interaction:
    initiator: int
    responder: int

    def validate(self, n: int) -> None:
        if self.initiator == self.responder:
            raise ValueError(f"interaction needs distinct agents, got {self}")
        for agent in (self.initiator, self.responder):
            if not 0 <= agent < n:
                raise ValueError(f"agent {agent} out of range for n={n}")


@dataclass(frozen=True, slots=True)
class ScheduleStep:
    """One executed interaction: who, decided by whom, and the step's coin."""

    step_index: int
    interaction: Interaction
    source: StepSource
    coin: int | None


@dataclass(frozen=True)
class SmoothingParams:
    """Replacement rate p, with the uint64 comparison precomputed.

    p is the probability that an adversarial proposal is thrown away in favor
    of a uniform ordered pair.  p = 1 is the fully random scheduler, p = 0
    (allowed only for attack demonstrations) hands every step to the
    adversary.
    """

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"replacement rate must be in [0, 1], got {self.p}")

    @property
    def replacement(self) -> tuple[bool, int]:
        return replacement_threshold(self.p)


@dataclass(frozen=True)
class AdversaryObservation:
    """Everything a strategy may condition on when proposing step step_index.

    The configuration is the live one after step_index - 1, and the history
    holds the executed steps before step_index, sources and coins included.
    Proposals therefore never depend on the current step's own randomness.
    """

    step_index: int
    config: "Configuration"
    history: Sequence[ScheduleStep]


class AdversaryStrategy(TypingProtocol):
    def propose(self, obs: AdversaryObservation) -> tuple[int, int]: ...


def randomize_order(pair: tuple[int, int], cursor: StreamCursor) -> Interaction:
    """Orient an unordered pair uniformly: one draw, low index first on bit 1."""
    x, y = pair
    if x == y:
        raise ValueError(f"pair needs distinct agents, got {pair}")
    lo, hi = (x, y) if x < y else (y, x)
    if cursor.next_bit():
        return Interaction(lo, hi)
    return Interaction(hi, lo)


def next_interaction(
    strategy: AdversaryStrategy,
    obs: AdversaryObservation,
    params: SmoothingParams,
    mode: RandomnessMode,
    rng: SubstreamRng,
) -> ScheduleStep:
    """Resolve one step: query, maybe replace, orient, and attach the coin.

    The strategy is queried unconditionally (before the replacement draw is
    even looked at); its proposal must name two distinct in-range agents.
    """
    step = obs.step_index
    n = obs.config.n
    proposal = strategy.propose(obs)
    pa, pb = proposal
    if pa == pb or not (0 <= pa < n) or not (0 <= pb < n):
        raise ValueError(
            f"adversary proposed invalid pair {proposal} at step {step} (n={n})"
        )
    always, threshold = params.replacement
    if rng.replaced(step, always, threshold):
        initiator, responder = rng.uniform_pair(step, n)
        interaction = Interaction(initiator, responder)
        source = StepSource.RANDOM
    else:
        if mode is RandomnessMode.ORDERED_RANDOM:
            lo, hi = (pa, pb) if pa < pb else (pb, pa)
            if rng.order_bit(step):
                interaction = Interaction(lo, hi)
            else:
                interaction = Interaction(hi, lo)
        else:
            interaction = Interaction(pa, pb)
        source = StepSource.ADVERSARIAL
    coin = rng.coin(step) if mode is RandomnessMode.COIN else None
    return ScheduleStep(step, interaction, source, coin)
