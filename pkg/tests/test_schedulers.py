"""Step resolution: replacement draws, orientation, coins, and validation."""

import pytest

from smoothedpp.engine import Configuration, new_population
from smoothedpp.protocols import Protocol, ProtocolKind
from smoothedpp.rng import (
    COIN_STREAM,
    ORDER_STREAM,
    PAIR_STREAM,
    SubstreamRng,
    pair_from_u64,
    stream_u64,
)
from smoothedpp.schedulers import (
    AdversaryObservation,
    Interaction,
    RandomnessMode,
    ScheduleStep,
    SmoothingParams,
    StepSource,
    next_interaction,
    randomize_order,
)


def _config(n):
    return new_population(Protocol(kind=ProtocolKind.EPIDEMIC), n)


class FixedStrategy:
    """Propose the same pair forever, counting how often we are asked."""

    def __init__(self, pair):
        self.pair = pair
        self.queries = 0

    def propose(self, obs):
        self.queries += 1
        return self.pair


class TestSmoothingParams:
    def test_accepts_endpoints(self):
        assert SmoothingParams(1.0).replacement == (True, 0)
        assert SmoothingParams(0.0).replacement == (False, 0)
        assert SmoothingParams(0.5).replacement == (False, 1 << 63)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SmoothingParams(-0.1)
        with pytest.raises(ValueError):
            SmoothingParams(1.01)


class TestInteraction:
    def test_validate_ok(self):
        Interaction(0, 3).validate(4)

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError):
            Interaction(2, 2).validate(4)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            Interaction(0, 4).validate(4)
        with pytest.raises(ValueError):
            Interaction(-1, 2).validate(4)


class TestRandomizeOrder:
    def test_deterministic_per_cursor_position(self):
        a = randomize_order((3, 7), SubstreamRng(11).cursor(ORDER_STREAM))
        b = randomize_order((3, 7), SubstreamRng(11).cursor(ORDER_STREAM))
        assert a == b

    def test_orientation_is_fair(self):
        cursor = SubstreamRng(5).cursor(ORDER_STREAM)
        low_first = sum(
            randomize_order((3, 7), cursor).initiator == 3 for _ in range(100_000)
        )
        assert abs(low_first / 100_000 - 0.5) < 0.01

    def test_input_order_irrelevant(self):
        # (7, 3) and (3, 7) are the same unordered pair
        a = randomize_order((7, 3), SubstreamRng(9).cursor(ORDER_STREAM))
        b = randomize_order((3, 7), SubstreamRng(9).cursor(ORDER_STREAM))
        assert a == b

    def test_degenerate_pair_rejected(self):
        with pytest.raises(ValueError):
            randomize_order((5, 5), SubstreamRng(1).cursor(ORDER_STREAM))


def _resolve(strategy, step, n, p, mode, seed, config=None):
    obs = AdversaryObservation(step, config or _config(n), history=())
    return next_interaction(strategy, obs, SmoothingParams(p), mode, SubstreamRng(seed))


class TestNextInteraction:
    def test_p1_uses_pair_stream(self):
        seed, n = 42, 16
        for step in range(50):
            sstep = _resolve(FixedStrategy((0, 1)), step, n, 1.0, RandomnessMode.COIN, seed)
            assert sstep.source is StepSource.RANDOM
            i, r = pair_from_u64(stream_u64(seed, PAIR_STREAM, step), n)
            assert (sstep.interaction.initiator, sstep.interaction.responder) == (i, r)
            assert sstep.coin == stream_u64(seed, COIN_STREAM, step) >> 63

    def test_p1_schedule_ignores_strategy_choice(self):
        # at full replacement every strategy yields the uniform schedule
        runs = []
        for pair in ((0, 1), (7, 2)):
            runs.append(
                [
                    _resolve(FixedStrategy(pair), s, 8, 1.0, RandomnessMode.COIN, 3)
                    for s in range(200)
                ]
            )
        assert runs[0] == runs[1]

    def test_strategy_queried_even_when_replaced(self):
        strategy = FixedStrategy((0, 1))
        for step in range(25):
            _resolve(strategy, step, 8, 1.0, RandomnessMode.COIN, 7)
        assert strategy.queries == 25

    def test_p0_keeps_proposal_in_coin_mode(self):
        sstep = _resolve(FixedStrategy((5, 2)), 0, 8, 0.0, RandomnessMode.COIN, 1)
        assert sstep.source is StepSource.ADVERSARIAL
        assert sstep.interaction == Interaction(5, 2)
        assert sstep.coin in (0, 1)

    def test_p0_ordered_mode_draws_orientation(self):
        seed, n = 13, 8
        seen = set()
        for step in range(200):
            sstep = _resolve(
                FixedStrategy((5, 2)), step, n, 0.0, RandomnessMode.ORDERED_RANDOM, seed
            )
            assert sstep.source is StepSource.ADVERSARIAL
            assert sstep.coin is None
            pair = (sstep.interaction.initiator, sstep.interaction.responder)
            assert pair in ((2, 5), (5, 2))
            bit = stream_u64(seed, ORDER_STREAM, step) >> 63
            assert pair == ((2, 5) if bit else (5, 2))
            seen.add(pair)
        assert len(seen) == 2  # both orientations actually occur

    def test_invalid_proposals_rejected(self):
        with pytest.raises(ValueError):
            _resolve(FixedStrategy((3, 3)), 0, 8, 1.0, RandomnessMode.COIN, 1)
        with pytest.raises(ValueError):
            _resolve(FixedStrategy((0, 8)), 0, 8, 0.0, RandomnessMode.COIN, 1)
        with pytest.raises(ValueError):
            _resolve(FixedStrategy((-1, 0)), 0, 8, 0.0, RandomnessMode.COIN, 1)

    def test_replacement_fraction_tracks_p(self):
        p, steps = 0.3, 20_000
        rng = SubstreamRng(99)
        params = SmoothingParams(p)
        config = _config(8)
        strategy = FixedStrategy((0, 1))
        random_steps = sum(
            next_interaction(
                strategy,
                AdversaryObservation(s, config, ()),
                params,
                RandomnessMode.COIN,
                rng,
            ).source
            is StepSource.RANDOM
            for s in range(steps)
        )
        sigma = (p * (1 - p) / steps) ** 0.5
        assert abs(random_steps / steps - p) < 6 * sigma

    def test_schedule_step_records_index(self):
        sstep = _resolve(FixedStrategy((0, 1)), 17, 8, 0.0, RandomnessMode.COIN, 1)
        assert sstep == ScheduleStep(17, Interaction(0, 1), StepSource.ADVERSARIAL, sstep.coin)


def test_configuration_accessors_used_by_observations():
    config = _config(6)
    assert config.n == 6
    assert isinstance(config, Configuration)
    obs = AdversaryObservation(0, config, history=())
    assert obs.config.n == 6
