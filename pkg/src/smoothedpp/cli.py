"""Command line entry points.

run and sweep execute a config file and write summary.csv (plus one JSONL
trace per trial when the config asks) into --out.  attack-demo contrasts a
baseline clock with the smoothed one under the scripted pair attack.
oracle exposes the two Monte-Carlo estimators.  validate-config parses a
config and reports what it would run without running it.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from .adversaries import StrategyKind, StrategySpec
from .engine import run_trial
from .experiments import (
    Cell,
    ConfigError,
    ExperimentConfig,
    ProtocolConstants,
    emit_csv,
    oracle_leader_halving,
    oracle_lemma_ubmin,
    parse_config,
    realize_protocol,
    run_experiment,
    trace_filename,
)
from .protocols import ProtocolKind

# The junta ratchet needs both orientations (a fixed responder never moves),
# while the leaderless counter is driven hardest by a fixed orientation: the
# hammered initiator keeps every increment instead of losing them to adoption.
_DEMO_CLOCKS = {
    "junta": (ProtocolKind.JUNTA_CLOCK, StrategySpec(StrategyKind.JUNTA_HAMMER)),
    "leaderless": (
        ProtocolKind.LEADERLESS_CLOCK,
        StrategySpec(StrategyKind.PAIR_HAMMER, 0, 1),
    ),
    "smoothed": (
        ProtocolKind.SMOOTHED_CLOCK,
        StrategySpec(StrategyKind.PAIR_HAMMER, 0, 1),
    ),
}


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _write_outputs(cfg: ExperimentConfig, out_dir: str, workers: int) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def sink(row, text):
        (out / trace_filename(row)).write_text(text)

    rows = run_experiment(cfg, workers=workers, trace_sink=sink if cfg.trace else None)
    (out / "summary.csv").write_text(emit_csv(rows))
    print(f"wrote {len(rows)} rows to {out / 'summary.csv'}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if cfg.is_sweep:
        raise ConfigError("config contains sweep lists; use the sweep command")
    return _write_outputs(cfg, args.out, args.workers)


def _cmd_sweep(args) -> int:
    return _write_outputs(_load_config(args.config), args.out, args.workers)


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    cells = sum(1 for _ in cfg.cells())
    print(
        f"config OK: {cells} cell(s) x {cfg.trials} trial(s), mode {cfg.mode.value}, "
        f"max_steps {cfg.max_steps}, seeds {cfg.base_seed}..{cfg.base_seed + cfg.trials - 1}"
    )
    return 0


def _median_stretch(
    kind: ProtocolKind, spec: StrategySpec, n: int, p: float, seed: int
) -> tuple[float | None, int]:
    trials, target_rounds, cap = 5, 3, 40_000_000
    stretches: list[int] = []
    for t in range(trials):
        protocol = realize_protocol(Cell(n, p, kind, spec), ProtocolConstants(), seed + t)
        result = run_trial(
            protocol,
            n,
            seed=seed + t,
            p=p,
            max_steps=cap,
            strategy=spec,
            stop_after_rounds=target_rounds,
            snapshot_stride=0,
        )
        stretches.extend(result.metrics.round_stretches())
    if not stretches:
        return None, 0
    return float(statistics.median(stretches)), len(stretches)


def _cmd_attack_demo(args) -> int:
    kind, attack = _DEMO_CLOCKS[args.clock]
    null = StrategySpec(StrategyKind.NULL)
    attacked, n_att = _median_stretch(kind, attack, args.n, args.p, args.seed)
    baseline, n_base = _median_stretch(kind, null, args.n, args.p, args.seed)
    print(f"{kind.value}, n={args.n}, p={args.p}, attack {attack.label()}")
    if attacked is None or baseline is None:
        print("  no completed rounds within the step cap; raise p or lower n")
        return 1
    print(f"  attacked:  median stretch {attacked:.0f} steps over {n_att} rounds")
    print(f"  baseline:  median stretch {baseline:.0f} steps over {n_base} rounds")
    print(f"  attacked / baseline: {attacked / baseline:.3f}")
    return 0


def _cmd_oracle(args) -> int:
    if args.which == "ubmin":
        est = oracle_lemma_ubmin(
            args.n,
            args.p,
            args.c,
            args.trials,
            args.seed,
            adversary=StrategySpec.from_label(args.adversary),
            gaps_per_trial=args.gaps_per_trial,
        )
        print(
            json.dumps(
                {
                    "probability_hat": est.probability_hat,
                    "ci_low": est.ci_low,
                    "ci_high": est.ci_high,
                }
            )
        )
    else:
        est = oracle_leader_halving(args.l0, args.trials, args.seed)
        print(
            json.dumps(
                {
                    "mean_ratio": est.mean_ratio,
                    "std_error": est.std_error,
                    "exact_ratio": est.exact_ratio,
                }
            )
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothedpp",
        description="Population protocol experiments under smoothed schedulers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single-cell config")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(handler=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run every cell of a sweep config")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_demo = sub.add_parser(
        "attack-demo", help="contrast a clock's stretch under attack and under Null"
    )
    p_demo.add_argument("--clock", choices=sorted(_DEMO_CLOCKS), required=True)
    p_demo.add_argument("--n", type=int, default=256)
    p_demo.add_argument("--p", type=float, default=0.5)
    p_demo.add_argument("--seed", type=int, default=1)
    p_demo.set_defaults(handler=_cmd_attack_demo)

    p_oracle = sub.add_parser("oracle", help="Monte-Carlo lemma estimators")
    oracle_sub = p_oracle.add_subparsers(dest="which", required=True)
    p_ub = oracle_sub.add_parser("ubmin", help="frontier-minute gap probability")
    p_ub.add_argument("--n", type=int, default=256)
    p_ub.add_argument("--p", type=float, default=1.0)
    p_ub.add_argument("--c", type=int, default=3)
    p_ub.add_argument("--trials", type=int, default=1000)
    p_ub.add_argument("--seed", type=int, default=0)
    p_ub.add_argument("--adversary", default="Null")
    p_ub.add_argument("--gaps-per-trial", type=int, default=1)
    p_ub.set_defaults(handler=_cmd_oracle)
    p_half = oracle_sub.add_parser("halving", help="leader survivor ratio")
    p_half.add_argument("--l0", type=int, default=16)
    p_half.add_argument("--trials", type=int, default=100_000)
    p_half.add_argument("--seed", type=int, default=0)
    p_half.set_defaults(handler=_cmd_oracle)

    p_val = sub.add_parser("validate-config", help="parse a config without running it")
    p_val.add_argument("config")
    p_val.set_defaults(handler=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
