"""State-for-state cross-check of the engine against straightline.py.

Each test generates thousands of randomized micro-trials (tiny populations,
short schedules, tiny counter thresholds so rollovers and adoptions actually
fire), records the executed schedule, replays it through the plain-tuple
transition rules, and compares every intermediate configuration. A slice of
the trials also runs on the compiled engine so both backends are checked
against the same reference.
"""

from __future__ import annotations

import random

import pytest

from smoothedpp.adversaries import StrategyKind, StrategySpec
from smoothedpp.engine import Configuration, run_trial
from smoothedpp.protocols import (
    ClockParams,
    ClockState,
    LeaderParams,
    LeaderState,
    Protocol,
    ProtocolKind,
)
from smoothedpp.schedulers import RandomnessMode

from straightline import (
    clock_step_coin,
    clock_step_ordered,
    leader_step_coin,
    leader_step_ordered,
)

TRACES_PER_RULE = 10_000
COMPILED_EVERY = 25
P_CHOICES = (0.0, 0.25, 0.5, 1.0)


def _clock_tuple(s: ClockState) -> tuple:
    return (s.second, s.minute, s.hour)


def _leader_tuple(s: LeaderState) -> tuple:
    return (s.leader, s.level, s.tick, _clock_tuple(s.clock))


def _random_clock_state(rng: random.Random, S: int, M: int) -> ClockState:
    return ClockState(
        second=rng.randrange(S), minute=rng.randrange(M), hour=rng.randrange(4)
    )


def _replay(rule: str, initial: list, trace, proto: Protocol) -> list:
    """Run the recorded schedule through the straight-line rules.

    Returns the list of full configurations (as tuples of state tuples),
    one per executed step.
    """
    S, M = proto.clock.S, proto.clock.M
    states = list(initial)
    seen = []
    for rec in trace:
        i = rec.interaction.initiator
        r = rec.interaction.responder
        if rule == "clock-coin":
            states[i] = clock_step_coin(states[i], states[r], rec.coin, S, M)
        elif rule == "clock-ordered":
            states[i], states[r] = clock_step_ordered(states[i], states[r], S, M)
        elif rule == "leader-coin":
            states[i], states[r] = leader_step_coin(
                states[i],
                states[r],
                rec.coin,
                proto.leader.ell_max,
                S,
                M,
                proto.leader.amended_two_leader,
            )
        else:
            states[i], states[r] = leader_step_ordered(
                states[i],
                states[r],
                proto.leader.ell_max,
                S,
                M,
                proto.leader.amended_two_leader,
            )
        seen.append(tuple(states))
    return seen


def run_reference_check(rule: str, traces: int, master_seed: int) -> int:
    """Randomized micro-trials for one transition rule; returns states compared.

    Raises AssertionError with enough context to rebuild the failing trial
    if the engine ever disagrees with the reference replay.
    """
    is_leader = rule.startswith("leader")
    ordered = rule.endswith("ordered")
    mode = RandomnessMode.ORDERED_RANDOM if ordered else RandomnessMode.COIN
    kind = ProtocolKind.LEADER_ELECTION if is_leader else ProtocolKind.SMOOTHED_CLOCK
    to_tuple = _leader_tuple if is_leader else _clock_tuple

    rng = random.Random(master_seed)
    compared = 0
    for idx in range(traces):
        n = rng.choice((2, 3, 4))
        steps = rng.randint(1, 20)
        S = rng.choice((1, 2, 3))
        M = rng.choice((2, 3))
        clock = ClockParams(S=S, M=M)
        if is_leader:
            leader = LeaderParams(
                ell_max=rng.choice((1, 2, 4)),
                amended_two_leader=rng.random() < 0.5,
            )
            proto = Protocol(kind=kind, clock=clock, leader=leader)
        else:
            proto = Protocol(kind=kind, clock=clock)

        p = rng.choice(P_CHOICES)
        if rng.random() < 0.5:
            a = rng.randrange(n)
            b = rng.randrange(n - 1)
            if b >= a:
                b += 1
            spec = StrategySpec(
                StrategyKind.PAIR_HAMMER, a=a, b=b, alternate=rng.random() < 0.5
            )
        else:
            spec = StrategySpec(StrategyKind.NULL)

        initial = None
        if rng.random() < 0.5:
            if is_leader:
                crafted = tuple(
                    LeaderState(
                        leader=rng.random() < 0.5,
                        level=rng.randrange(proto.leader.ell_max + 1),
                        tick=rng.random() < 0.5,
                        clock=_random_clock_state(rng, S, M),
                    )
                    for _ in range(n)
                )
            else:
                crafted = tuple(_random_clock_state(rng, S, M) for _ in range(n))
            initial = Configuration(proto, crafted)

        engine = "compiled" if idx % COMPILED_EVERY == 0 else "python"
        result = run_trial(
            proto,
            n,
            seed=rng.getrandbits(64),
            p=p,
            max_steps=steps,
            mode=mode,
            strategy=spec,
            stop_on_stabilize=False,
            trace=True,
            snapshot_stride=1,
            initial=initial,
            engine=engine,
        )

        ctx = f"{rule} trial {idx}: n={n} S={S} M={M} p={p} {spec.label()} {engine}"
        assert len(result.trace) == steps, ctx
        assert result.snapshots.steps == tuple(range(steps + 1)), ctx

        start = [to_tuple(s) for s in result.initial.states]
        assert [to_tuple(s) for s in result.snapshots.states[0]] == start, ctx
        expected = _replay(rule, start, result.trace, proto)
        for k, want in enumerate(expected, start=1):
            got = tuple(to_tuple(s) for s in result.snapshots.states[k])
            assert got == want, f"{ctx}, diverged after step {k - 1}"
        compared += len(expected)
        assert tuple(to_tuple(s) for s in result.final.states) == expected[-1], ctx
    return compared


@pytest.mark.parametrize(
    "rule", ("clock-coin", "leader-coin", "clock-ordered", "leader-ordered")
)
def test_engine_matches_reference(rule):
    compared = run_reference_check(rule, TRACES_PER_RULE, master_seed=0x5EED + 1)
    # ~10 steps per trial on average; make sure the volume was really there
    assert compared > 5 * TRACES_PER_RULE


def test_reference_rules_are_not_cross_compatible():
    """The two leader rule variants genuinely differ on a two-leader tie."""
    u = (True, 2, False, (0, 0, 0))
    v = (True, 2, False, (0, 0, 0))
    amended_u, amended_v = leader_step_coin(u, v, 0, 4, 3, 3, True)
    literal_u, literal_v = leader_step_coin(u, v, 0, 4, 3, 3, False)
    # a tie demotes the initiator under both, but a higher initiator differs
    assert amended_u[0] is False and literal_u[0] is False
    hi = (True, 3, False, (0, 0, 0))
    am_u, am_v = leader_step_coin(hi, v, 0, 4, 3, 3, True)
    li_u, li_v = leader_step_coin(hi, v, 0, 4, 3, 3, False)
    assert am_u[0] is True and am_v == (False, 3, False, (0, 0, 0))
    assert li_u[0] is False and li_v[0] is True
