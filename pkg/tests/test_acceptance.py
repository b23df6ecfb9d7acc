"""Acceptance gate: twelve numbered end-to-end checks, one test each.

Run with ``pytest tests/test_acceptance.py -v -s``; each test prints a
single [PASS] line with the measured numbers once its assertions hold.
Expect 15 to 20 minutes on one core, dominated by the two phase-clock
soundness checks (hundreds of millions of interactions each). Every seed
below is fixed, so the suite is deterministic end to end.

Three thresholds in check 5 are calibrated, not derived: they were measured
once at n=512, p=0.5 and frozen. The junta bound of 64 steps held with a
measured median of 22; the leaderless bound is 24*ceil(log2 n) because the
first candidate of 16*log2 n landed exactly on the measured median of 144;
the smoothed-clock floor is the population size itself, cleared by a factor
of several thousand. README records the measurements.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import replace

from smoothedpp.adversaries import StrategyKind, StrategySpec
from smoothedpp.engine import Configuration, run_trial
from smoothedpp.experiments import (
    Cell,
    ProtocolConstants,
    oracle_leader_halving,
    oracle_lemma_ubmin,
    parse_config,
    realize_protocol,
    run_experiment,
)
from smoothedpp.protocols import (
    ClockState,
    LeaderParams,
    LeaderState,
    Protocol,
    ProtocolKind,
    ceil_log2,
    derive_clock_params,
)
from smoothedpp.schedulers import RandomnessMode

from test_pseudocode_oracle import run_reference_check

CONST = ProtocolConstants()
NULL = StrategySpec(StrategyKind.NULL)
HAMMER01 = StrategySpec(StrategyKind.PAIR_HAMMER, a=0, b=1)
ORDERED = RandomnessMode.ORDERED_RANDOM

# calibrated stretch thresholds for check 5 (see module docstring)
JUNTA_STRETCH_LIMIT = 64
LEADERLESS_STRETCH_LIMIT = 24 * ceil_log2(512)  # 216
SMOOTHED_STRETCH_FLOOR = 512  # the population size


def _protocol(kind: ProtocolKind, n: int, p: float, seed: int = 0) -> Protocol:
    return realize_protocol(Cell(n, p, kind, NULL), CONST, seed)


def _rows(doc: dict):
    cfg = parse_config(json.dumps(doc))
    return cfg, run_experiment(cfg)


def test_criterion_01_determinism_and_model_sanity():
    # identical (config, seed) gives identical traces, on both engines
    proto = _protocol(ProtocolKind.SMOOTHED_CLOCK, 64, 0.5)
    spec = StrategySpec(StrategyKind.PAIR_HAMMER, a=3, b=9)
    kw = dict(
        seed=150,
        p=0.5,
        max_steps=50_000,
        strategy=spec,
        trace=True,
        stop_on_stabilize=False,
    )
    first = run_trial(proto, 64, **kw)
    again = run_trial(proto, 64, **kw)
    assert first.trace == again.trace
    assert first.final == again.final and first.metrics == again.metrics
    pure = run_trial(proto, 64, engine="python", **kw)
    assert pure.trace == first.trace and pure.final == first.final

    # p=1 makes every strategy's rows identical to Null's under shared seeds
    sweeps = [
        ("Epidemic", 256, ["Null", "PairHammer(0,1)", "StallEpidemic"], 200_000, 101),
        ("SmoothedClock", 64, ["Null", "PairHammer(0,1)"], 120_000, 111),
        ("JuntaClock", 64, ["Null", "PairHammer(0,1)", "JuntaHammer"], 120_000, 121),
        ("LeaderlessClock", 64, ["Null", "PairHammer(0,1)"], 120_000, 131),
        ("LeaderElection", 64, ["Null", "PairHammer(0,1)", "LeaderIsolation"], 5_000_000, 141),
    ]
    for name, n, advs, cap, base in sweeps:
        _, rows = _rows(
            {
                "n": n,
                "p": 1.0,
                "protocol": name,
                "adversary": advs,
                "trials": 3,
                "base_seed": base,
                "max_steps": cap,
            }
        )
        groups = [rows[i * 3 : (i + 1) * 3] for i in range(len(advs))]
        blind = [[replace(r, adversary="*") for r in g] for g in groups]
        for other in blind[1:]:
            assert other == blind[0], name
        for row in rows:
            assert row.random_step_fraction == 1.0, name

    # random_step_fraction lands within 6 binomial sigma on long trials
    for p in (0.3, 0.7):
        proto = _protocol(ProtocolKind.SMOOTHED_CLOCK, 64, p)
        for t in range(3):
            r = run_trial(
                proto, 64, seed=160 + t, p=p, max_steps=150_000, stop_on_stabilize=False
            )
            steps = r.metrics.steps_executed
            assert steps >= 100_000
            tol = 6 * math.sqrt(p * (1 - p) / steps)
            assert abs(r.metrics.random_step_fraction - p) <= tol, (p, t)

    print(
        "[PASS] 01 determinism and model sanity: traces repeat exactly, "
        "p=1 rows are strategy-blind across 5 protocols, fractions within 6 sigma"
    )


def test_criterion_02_epidemic_under_uniform_scheduling():
    n = 1024
    proto = _protocol(ProtocolKind.EPIDEMIC, n, 1.0)
    finishes = []
    for t in range(200):
        r = run_trial(proto, n, seed=200 + t, p=1.0, max_steps=2_000_000)
        assert r.metrics.epidemic_finish is not None, t
        finishes.append(r.metrics.epidemic_finish)
    ratio = statistics.median(finishes) / (n * math.log(n))
    assert 0.5 <= ratio <= 8.0, ratio
    print(
        f"[PASS] 02 epidemic under uniform scheduling: 200/200 finished, "
        f"median {statistics.median(finishes):.0f} steps = {ratio:.2f} n ln n"
    )


def test_criterion_03_epidemic_under_attack():
    n = 1024
    medians = {}
    for p in (1.0, 0.5, 0.25):
        proto = _protocol(ProtocolKind.EPIDEMIC, n, p)
        bound = round(8 * n * ceil_log2(n) / p)
        finishes = []
        for t in range(100):
            r = run_trial(
                proto,
                n,
                seed=300 + t,
                p=p,
                max_steps=bound,
                strategy=StrategySpec(StrategyKind.STALL_EPIDEMIC),
            )
            assert r.metrics.epidemic_finish is not None, (p, t)
            assert r.metrics.epidemic_finish <= bound
            finishes.append(r.metrics.epidemic_finish)
        medians[p] = statistics.median(finishes)
    ratio = medians[0.25] / medians[1.0]
    assert 2.0 <= ratio <= 8.0, ratio
    print(
        f"[PASS] 03 epidemic under attack: all 300 finished within bound, "
        f"medians {medians}, p=0.25 over p=1 ratio {ratio:.2f}"
    )


def _clock_soundness(n: int, mode: RandomnessMode, seed_bases: dict[str, int]):
    """Shared body of checks 4 and 11a: 50 trials per adversary, first 12
    completed rounds each, pooled round properties."""
    lengths = []
    stretches = []
    for spec, base in ((NULL, seed_bases["null"]), (HAMMER01, seed_bases["hammer"])):
        proto = _protocol(ProtocolKind.SMOOTHED_CLOCK, n, 1.0)
        for t in range(50):
            r = run_trial(
                proto,
                n,
                seed=base + t,
                p=1.0,
                strategy=spec,
                mode=mode,
                max_steps=600_000_000,
                stop_after_rounds=12,
                stop_on_stabilize=False,
            )
            m = r.metrics
            assert m.violations == 0, (spec.label(), t)
            rounds = m.rounds[:12]
            assert len(rounds) == 12, (spec.label(), t, len(rounds))
            lengths += [x.length for x in rounds]
            stretches += [x.stretch for x in rounds]
    positive = sum(1 for x in lengths if x > 0)
    assert positive / len(lengths) >= 0.95
    assert all(l <= s for l, s in zip(lengths, stretches))
    return len(lengths), positive


def test_criterion_04_phase_clock_soundness():
    total, positive = _clock_soundness(
        1024, RandomnessMode.COIN, {"null": 400, "hammer": 460}
    )
    print(
        f"[PASS] 04 phase clock soundness: {positive}/{total} rounds with "
        f"positive length, all lengths within stretch, no invariant violations"
    )


def test_criterion_05_attack_discrimination():
    n, p = 512, 0.5

    junta = []
    for t in range(20):
        proto = realize_protocol(
            Cell(n, p, ProtocolKind.JUNTA_CLOCK, NULL), CONST, 500 + t
        )
        r = run_trial(
            proto,
            n,
            seed=500 + t,
            p=p,
            strategy=StrategySpec(StrategyKind.JUNTA_HAMMER),
            max_steps=50_000_000,
            stop_after_rounds=8,
            stop_on_stabilize=False,
        )
        junta += r.metrics.round_stretches()

    leaderless = []
    proto = _protocol(ProtocolKind.LEADERLESS_CLOCK, n, p)
    for t in range(20):
        r = run_trial(
            proto,
            n,
            seed=520 + t,
            p=p,
            strategy=HAMMER01,
            max_steps=50_000_000,
            stop_after_rounds=8,
            stop_on_stabilize=False,
        )
        leaderless += r.metrics.round_stretches()

    smoothed = []
    proto = _protocol(ProtocolKind.SMOOTHED_CLOCK, n, p)
    for t in range(10):
        r = run_trial(
            proto,
            n,
            seed=540 + t,
            p=p,
            strategy=HAMMER01,
            max_steps=150_000_000,
            stop_after_rounds=2,
            stop_on_stabilize=False,
        )
        smoothed += r.metrics.round_stretches()

    med_junta = statistics.median(junta)
    med_leaderless = statistics.median(leaderless)
    med_smoothed = statistics.median(smoothed)
    assert med_junta <= JUNTA_STRETCH_LIMIT, med_junta
    assert med_leaderless <= LEADERLESS_STRETCH_LIMIT, med_leaderless
    assert med_smoothed >= SMOOTHED_STRETCH_FLOOR, med_smoothed
    print(
        f"[PASS] 05 attack discrimination: junta median stretch {med_junta} "
        f"<= {JUNTA_STRETCH_LIMIT}, leaderless {med_leaderless} <= "
        f"{LEADERLESS_STRETCH_LIMIT}, smoothed {med_smoothed:.0f} >= "
        f"{SMOOTHED_STRETCH_FLOOR}"
    )


def test_criterion_06_stretch_scaling_in_p():
    n = 512
    medians = {}
    for p, base in ((1.0, 600), (0.5, 650)):
        proto = _protocol(ProtocolKind.SMOOTHED_CLOCK, n, p)
        pool = []
        for t in range(50):
            r = run_trial(
                proto,
                n,
                seed=base + t,
                p=p,
                max_steps=300_000_000,
                stop_after_rounds=4,
                stop_on_stabilize=False,
            )
            pool += r.metrics.round_stretches()
        medians[p] = statistics.median(pool)
    ratio = medians[0.5] / medians[1.0]
    assert 1.5 <= ratio <= 10.0, ratio
    print(
        f"[PASS] 06 stretch scaling: median stretch {medians[1.0]:.0f} at p=1, "
        f"{medians[0.5]:.0f} at p=0.5, ratio {ratio:.2f}"
    )


def _leader_correctness(ns, ps, seed_base, mode, snapshot_stride):
    """Shared body of checks 7 and 11b. Every trial must stabilize to one
    leader inside the step bound with clean invariants along the way."""
    specs = (NULL, HAMMER01, StrategySpec(StrategyKind.LEADER_ISOLATION))
    trials = 0
    worst = 0.0
    cell_index = 0
    for n in ns:
        for p in ps:
            proto = _protocol(ProtocolKind.LEADER_ELECTION, n, p)
            bound = int(50 * n * ceil_log2(n) ** 3 / (p * p))
            for spec in specs:
                for t in range(50):
                    r = run_trial(
                        proto,
                        n,
                        seed=seed_base + cell_index * 50 + t,
                        p=p,
                        strategy=spec,
                        mode=mode,
                        max_steps=bound,
                        snapshot_stride=snapshot_stride(n),
                    )
                    m = r.metrics
                    stab = m.stabilization
                    label = (n, p, spec.label(), t)
                    assert stab.reached_single_leader, label
                    assert stab.stabilization_steps <= bound, label
                    assert stab.zero_leader_step is None, label
                    assert r.final.leader_count() == 1, label
                    assert m.violations == 0, label
                    for states in r.snapshots.states:
                        leaders = sum(1 for s in states if s.leader)
                        assert leaders >= 1, label
                        top = max(s.level for s in states)
                        assert any(s.leader and s.level == top for s in states), label
                    worst = max(worst, stab.stabilization_steps / bound)
                    trials += 1
                cell_index += 1
    return trials, worst


def test_criterion_07_leader_election_correctness():
    trials, worst = _leader_correctness(
        ns=(256, 1024),
        ps=(1.0, 0.5),
        seed_base=7000,
        mode=RandomnessMode.COIN,
        snapshot_stride=lambda n: 20_000 if n == 256 else 100_000,
    )
    print(
        f"[PASS] 07 leader election: {trials}/600 trials stabilized to one "
        f"leader, worst case at {worst:.1%} of the step bound, no violations"
    )


def test_criterion_08_literal_two_leader_rule_counterexample():
    zero = ClockState(0, 0, 0)
    start = (LeaderState(True, 7, False, zero), LeaderState(True, 5, False, zero))
    alternating = StrategySpec(StrategyKind.PAIR_HAMMER, a=0, b=1, alternate=True)
    literal = Protocol(
        kind=ProtocolKind.LEADER_ELECTION,
        clock=derive_clock_params(2, 1.0),
        leader=LeaderParams(ell_max=8, amended_two_leader=False),
    )
    for engine in ("compiled", "python"):
        r = run_trial(
            literal,
            2,
            seed=800,
            p=0.0,
            max_steps=2,
            strategy=alternating,
            stop_on_stabilize=False,
            initial=Configuration(literal, start),
            engine=engine,
        )
        assert r.initial.leader_count() == 2
        assert r.final.leader_count() == 0, engine
        assert r.metrics.stabilization.zero_leader_step == 1, engine

    # the amended rule keeps a leader alive on the same schedule
    amended = Protocol(
        kind=ProtocolKind.LEADER_ELECTION,
        clock=derive_clock_params(2, 1.0),
        leader=LeaderParams(ell_max=8, amended_two_leader=True),
    )
    r = run_trial(
        amended,
        2,
        seed=800,
        p=0.0,
        max_steps=2,
        strategy=alternating,
        stop_on_stabilize=False,
        initial=Configuration(amended, start),
    )
    assert r.final.leader_count() == 1
    print(
        "[PASS] 08 literal rule counterexample: leader count hits 0 in two "
        "scripted steps on both engines; the amended rule keeps one leader"
    )


def test_criterion_09_minute_gap_oracle():
    est = oracle_lemma_ubmin(256, 1.0, 3, trials=1000, seed=900)
    assert est.ci_low > 0.45, est
    assert est.probability_hat >= 0.5, est
    print(
        f"[PASS] 09 minute-gap oracle: phat {est.probability_hat:.3f}, "
        f"Wilson low {est.ci_low:.3f} > 0.45 over 1000 trials"
    )


def test_criterion_10_leader_halving_oracle():
    outcomes = []
    for L0 in (2, 4, 16):
        est = oracle_leader_halving(L0, 100_000, seed=11)
        assert abs(est.mean_ratio - est.exact_ratio) <= 3 * est.std_error, (L0, est)
        assert est.mean_ratio <= 0.75 + 3 * est.std_error, (L0, est)
        outcomes.append(f"L0={L0}: {est.mean_ratio:.4f}~{est.exact_ratio:.4f}")
    print(f"[PASS] 10 leader-halving oracle: {', '.join(outcomes)}")


def test_criterion_11_ordered_mode_variants():
    total, positive = _clock_soundness(
        512, ORDERED, {"null": 11100, "hammer": 11160}
    )

    trials, worst = _leader_correctness(
        ns=(512,),
        ps=(1.0, 0.5),
        seed_base=11300,
        mode=ORDERED,
        snapshot_stride=lambda n: 50_000,
    )

    # tick fairness: a pending tick is spent as initiator (increment) or as
    # responder (no increment) with equal probability.  A deliberately fast
    # clock makes hour rollovers, and so tick raises, frequent enough to pool
    # over a thousand consumptions per trial; the huge cap keeps every
    # consumption below saturation so each initiator spend counts.
    fast = Protocol(
        kind=ProtocolKind.LEADER_ELECTION,
        clock=derive_clock_params(2, 1.0),
        leader=LeaderParams(ell_max=1_000_000),
    )
    zero = ClockState(0, 0, 0)

    def lone_leader(at: int) -> Configuration:
        return Configuration(
            fast, tuple(LeaderState(i == at, 0, False, zero) for i in range(512))
        )

    fairness = []
    for seed, p, spec, at in (
        (21, 1.0, NULL, 0),
        (22, 1.0, NULL, 0),
        (23, 1.0, NULL, 0),
        (31, 0.5, HAMMER01, 300),
        (32, 0.5, HAMMER01, 300),
    ):
        r = run_trial(
            fast,
            512,
            seed=seed,
            p=p,
            max_steps=12_000_000,
            mode=ORDERED,
            strategy=spec,
            stop_on_stabilize=False,
            initial=lone_leader(at),
        )
        m = r.metrics
        assert m.ticks_consumed >= 1000, seed
        frac = m.ticks_incremented / m.ticks_consumed
        assert 0.45 <= frac <= 0.55, (seed, frac)
        fairness.append(frac)

    print(
        f"[PASS] 11 ordered-mode variants: {positive}/{total} clock rounds "
        f"positive, {trials}/300 leader trials stabilized (worst {worst:.1%} "
        f"of bound), tick fairness {min(fairness):.3f}..{max(fairness):.3f}"
    )


def test_criterion_12_reference_equivalence():
    compared = 0
    for rule in ("clock-coin", "leader-coin", "clock-ordered", "leader-ordered"):
        compared += run_reference_check(rule, 10_000, master_seed=0xACCE5)
    print(
        f"[PASS] 12 reference equivalence: 4 x 10000 randomized micro-trials, "
        f"{compared} configurations compared state-for-state"
    )
