"""Experiment orchestration on top of the trial engine.

A strict JSON config describes one experiment or a sweep (lists on n, p,
protocol, adversary become a cross product of cells).  Each cell runs
`trials` trials seeded base_seed, base_seed + 1, ... so cells are paired
across the sweep, rows come back in a deterministic order no matter how
many workers ran them, and any row can be reproduced in isolation from its
seed.  The module also hosts the two Monte-Carlo oracles used by the test
suite to check probabilistic claims about the clock and the leader count.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from io import StringIO
from typing import Any, Iterator, Sequence

import numpy as np

from .adversaries import StrategyKind, StrategySpec
from .engine import MAX_TRACE_STEPS, TrialResult, derive_junta, run_trial
from .protocols import (
    LeaderParams,
    Protocol,
    ProtocolKind,
    ceil_log2,
    derive_clock_params,
    derive_leader_params,
)
from .schedulers import RandomnessMode, ScheduleStep

SCHEMA_VERSION = 1

CSV_HEADER = (
    "trial",
    "seed",
    "n",
    "p",
    "protocol",
    "adversary",
    "mode",
    "steps_executed",
    "stabilization_steps",
    "rounds_observed",
    "min_length",
    "median_length",
    "median_stretch",
    "max_stretch",
    "epidemic_finish",
    "random_step_fraction",
)


class ConfigError(ValueError):
    """A config document failed validation."""


class TrialError(RuntimeError):
    """A trial raised; carries the trial index and cell so sweeps are debuggable."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True, slots=True)
class ProtocolConstants:
    """Tunable constants shared by every cell of an experiment."""

    c: int = 3
    c_M: int = 8
    c_L: int = 4
    epsilon_junta: float = 0.5
    M_const: int = 8
    hour_modulus: int | None = None


@dataclass(frozen=True, slots=True)
class Cell:
    """One point of the sweep cross product."""

    n: int
    p: float
    protocol: ProtocolKind
    adversary: StrategySpec


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple[int, ...]
    p_values: tuple[float, ...]
    protocol_values: tuple[ProtocolKind, ...]
    adversary_values: tuple[StrategySpec, ...]
    mode: RandomnessMode
    constants: ProtocolConstants
    trials: int
    base_seed: int
    max_steps: int
    stop_on_stabilize: bool = True
    stop_after_rounds: int | None = None
    snapshot_stride: int | None = None
    trace: bool = False
    allow_p_zero: bool = False
    n_hint: int | None = None
    p_hint: float | None = None
    two_leader_rule: str = "amended"

    @property
    def is_sweep(self) -> bool:
        return (
            len(self.n_values) > 1
            or len(self.p_values) > 1
            or len(self.protocol_values) > 1
            or len(self.adversary_values) > 1
        )

    def _only(self, values: tuple, what: str):
        if len(values) != 1:
            raise ValueError(f"config sweeps over {what}; pick a cell explicitly")
        return values[0]

    @property
    def n(self) -> int:
        return self._only(self.n_values, "n")

    @property
    def p(self) -> float:
        return self._only(self.p_values, "p")

    @property
    def protocol(self) -> ProtocolKind:
        return self._only(self.protocol_values, "protocol")

    @property
    def adversary(self) -> StrategySpec:
        return self._only(self.adversary_values, "adversary")

    def cells(self) -> Iterator[Cell]:
        """Cross product in document order: n, then p, protocol, adversary."""
        for n in self.n_values:
            for p in self.p_values:
                for protocol in self.protocol_values:
                    for adversary in self.adversary_values:
                        yield Cell(n, p, protocol, adversary)


_TOP_KEYS = {
    "schema_version",
    "n",
    "p",
    "protocol",
    "mode",
    "adversary",
    "constants",
    "trials",
    "base_seed",
    "max_steps",
    "stop_on_stabilize",
    "stop_after_rounds",
    "snapshot_stride",
    "trace",
    "allow_p_zero",
    "n_hint",
    "p_hint",
    "two_leader_rule",
}
_CONSTANT_KEYS = {"c", "c_M", "c_L", "epsilon_junta", "M_const", "hour_modulus"}
_TWO_LEADER_RULES = ("amended", "literal_pseudocode")


def _need_int(value: Any, where: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where} must be at least {minimum}, got {value}")
    return value


def _need_real(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _need_bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where} must be true or false, got {value!r}")
    return value


def _as_list(value: Any) -> list:
    return value if isinstance(value, list) else [value]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a config document.

    The schema is strict: unknown keys anywhere are an error, as is p = 0
    without the explicit allow_p_zero flag (attacks at p = 0 are demos, not
    experiments).  n, p, protocol, and adversary accept lists for sweeps.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")

    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("n", "p", "protocol", "trials", "base_seed", "max_steps"):
        if key not in doc:
            raise ConfigError(f"missing required config key {key!r}")

    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")

    allow_p_zero = _need_bool(doc.get("allow_p_zero", False), "allow_p_zero")

    raw_ns = _as_list(doc["n"])
    if not raw_ns:
        raise ConfigError("n list must not be empty")
    n_values = tuple(_need_int(v, "n", minimum=2) for v in raw_ns)

    raw_ps = _as_list(doc["p"])
    if not raw_ps:
        raise ConfigError("p list must not be empty")
    p_values = []
    for v in raw_ps:
        p = _need_real(v, "p")
        if p < 0.0 or p > 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {p}")
        if p == 0.0 and not allow_p_zero:
            raise ConfigError("p = 0 disables smoothing entirely; set allow_p_zero to confirm")
        p_values.append(p)

    raw_protocols = _as_list(doc["protocol"])
    if not raw_protocols:
        raise ConfigError("protocol list must not be empty")
    protocol_values = []
    for v in raw_protocols:
        try:
            protocol_values.append(ProtocolKind(v))
        except ValueError:
            names = ", ".join(k.value for k in ProtocolKind)
            raise ConfigError(f"unknown protocol {v!r}; expected one of {names}") from None

    raw_advs = _as_list(doc.get("adversary", "Null"))
    if not raw_advs:
        raise ConfigError("adversary list must not be empty")
    adversary_values = []
    for v in raw_advs:
        if not isinstance(v, str):
            raise ConfigError(f"adversary must be a strategy label, got {v!r}")
        try:
            adversary_values.append(StrategySpec.from_label(v))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    mode_raw = doc.get("mode", RandomnessMode.COIN.value)
    try:
        mode = RandomnessMode(mode_raw)
    except ValueError:
        names = ", ".join(m.value for m in RandomnessMode)
        raise ConfigError(f"unknown mode {mode_raw!r}; expected one of {names}") from None

    constants_doc = doc.get("constants", {})
    if not isinstance(constants_doc, dict):
        raise ConfigError("constants must be an object")
    bad = sorted(set(constants_doc) - _CONSTANT_KEYS)
    if bad:
        raise ConfigError(f"unknown constants keys: {', '.join(bad)}")
    modulus = constants_doc.get("hour_modulus")
    if modulus is not None:
        modulus = _need_int(modulus, "constants.hour_modulus", minimum=2)
    epsilon = _need_real(constants_doc.get("epsilon_junta", 0.5), "constants.epsilon_junta")
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"constants.epsilon_junta must lie in (0, 1), got {epsilon}")
    constants = ProtocolConstants(
        c=_need_int(constants_doc.get("c", 3), "constants.c", minimum=3),
        c_M=_need_int(constants_doc.get("c_M", 8), "constants.c_M", minimum=1),
        c_L=_need_int(constants_doc.get("c_L", 4), "constants.c_L", minimum=1),
        epsilon_junta=epsilon,
        M_const=_need_int(constants_doc.get("M_const", 8), "constants.M_const", minimum=1),
        hour_modulus=modulus,
    )

    trials = _need_int(doc["trials"], "trials", minimum=1)
    base_seed = _need_int(doc["base_seed"], "base_seed", minimum=0)
    if base_seed + trials > 2**64:
        raise ConfigError("base_seed + trials exceeds the 64-bit seed space")
    max_steps = _need_int(doc["max_steps"], "max_steps", minimum=1)

    stop_after_rounds = doc.get("stop_after_rounds")
    if stop_after_rounds is not None:
        stop_after_rounds = _need_int(stop_after_rounds, "stop_after_rounds", minimum=1)
        if ProtocolKind.EPIDEMIC in protocol_values:
            raise ConfigError("stop_after_rounds needs a protocol with hours; Epidemic has none")

    snapshot_stride = doc.get("snapshot_stride")
    if snapshot_stride is not None:
        snapshot_stride = _need_int(snapshot_stride, "snapshot_stride", minimum=1)

    trace = _need_bool(doc.get("trace", False), "trace")
    if trace and max_steps > MAX_TRACE_STEPS:
        raise ConfigError(
            f"trace capture is capped at {MAX_TRACE_STEPS} steps; lower max_steps"
        )

    n_hint = doc.get("n_hint")
    if n_hint is not None:
        n_hint = _need_int(n_hint, "n_hint", minimum=2)
    p_hint = doc.get("p_hint")
    if p_hint is not None:
        p_hint = _need_real(p_hint, "p_hint")
        if not 0.0 < p_hint <= 1.0:
            raise ConfigError(f"p_hint must lie in (0, 1], got {p_hint}")

    rule = doc.get("two_leader_rule", "amended")
    if rule not in _TWO_LEADER_RULES:
        raise ConfigError(
            f"two_leader_rule must be one of {_TWO_LEADER_RULES}, got {rule!r}"
        )

    for protocol in protocol_values:
        for spec in adversary_values:
            if not spec.compatible_with(protocol):
                raise ConfigError(
                    f"adversary {spec.label()} does not apply to {protocol.value}"
                )
            if spec.kind is StrategyKind.PAIR_HAMMER:
                for n in n_values:
                    if not (0 <= spec.a < n and 0 <= spec.b < n) or spec.a == spec.b:
                        raise ConfigError(
                            f"PairHammer agents ({spec.a},{spec.b}) out of range for n={n}"
                        )

    return ExperimentConfig(
        n_values=n_values,
        p_values=tuple(p_values),
        protocol_values=tuple(protocol_values),
        adversary_values=tuple(adversary_values),
        mode=mode,
        constants=constants,
        trials=trials,
        base_seed=base_seed,
        max_steps=max_steps,
        stop_on_stabilize=_need_bool(doc.get("stop_on_stabilize", True), "stop_on_stabilize"),
        stop_after_rounds=stop_after_rounds,
        snapshot_stride=snapshot_stride,
        trace=trace,
        allow_p_zero=allow_p_zero,
        n_hint=n_hint,
        p_hint=p_hint,
        two_leader_rule=rule,
    )


def realize_protocol(
    cell: Cell,
    constants: ProtocolConstants,
    seed: int,
    *,
    n_hint: int | None = None,
    p_hint: float | None = None,
    two_leader_rule: str = "amended",
) -> Protocol:
    """Build the Protocol a trial runs, deriving sizes from the cell.

    The junta is sampled from the trial seed so trials draw independent
    juntas.  n_hint and p_hint override the derivation inputs without
    changing the population or the scheduler, which is how a clock sized
    for one regime gets exercised in another.  p = 0 derives as if p = 1;
    the thresholds stay finite and the run is purely adversarial anyway.
    """
    kind = cell.protocol
    if kind is ProtocolKind.EPIDEMIC:
        return Protocol(kind=kind, source=0)
    if kind is ProtocolKind.JUNTA_CLOCK:
        junta = derive_junta(cell.n, seed, constants.epsilon_junta)
        return Protocol(kind=kind, m_const=constants.M_const, junta=junta)
    n_eff = n_hint if n_hint is not None else cell.n
    p_eff = p_hint if p_hint is not None else (cell.p if cell.p > 0 else 1.0)
    clock = derive_clock_params(
        n_eff, p_eff, c=constants.c, c_m=constants.c_M, hour_modulus=constants.hour_modulus
    )
    if kind is ProtocolKind.LEADER_ELECTION:
        leader = derive_leader_params(n_eff, c_l=constants.c_L)
        if two_leader_rule == "literal_pseudocode":
            leader = LeaderParams(ell_max=leader.ell_max, amended_two_leader=False)
        return Protocol(kind=kind, clock=clock, leader=leader)
    return Protocol(kind=kind, clock=clock)


# ---------------------------------------------------------------------------
# summary rows


@dataclass(frozen=True, slots=True)
class SummaryRow:
    """One trial's line in the summary CSV.

    Fields that do not apply to the protocol (or were never reached) are
    None and serialize as empty strings, never as zeros.
    """

    trial: int
    seed: int
    n: int
    p: float
    protocol: str
    adversary: str
    mode: str
    steps_executed: int
    stabilization_steps: int | None
    rounds_observed: int | None
    min_length: int | None
    median_length: float | None
    median_stretch: float | None
    max_stretch: int | None
    epidemic_finish: int | None
    random_step_fraction: float | None

    def to_fields(self) -> list[str]:
        def cell(v) -> str:
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [
            cell(self.trial),
            cell(self.seed),
            cell(self.n),
            cell(self.p),
            self.protocol,
            self.adversary,
            self.mode,
            cell(self.steps_executed),
            cell(self.stabilization_steps),
            cell(self.rounds_observed),
            cell(self.min_length),
            cell(self.median_length),
            cell(self.median_stretch),
            cell(self.max_stretch),
            cell(self.epidemic_finish),
            cell(self.random_step_fraction),
        ]


def summarize_trial(
    trial: int,
    seed: int,
    cell: Cell,
    mode: RandomnessMode,
    result: TrialResult,
) -> SummaryRow:
    m = result.metrics
    lengths = m.round_lengths()
    stretches = m.round_stretches()
    stab = m.stabilization.stabilization_steps if m.stabilization else None
    fraction = m.random_steps / m.steps_executed if m.steps_executed else None
    return SummaryRow(
        trial=trial,
        seed=seed,
        n=cell.n,
        p=cell.p,
        protocol=cell.protocol.value,
        adversary=cell.adversary.label(),
        mode=mode.value,
        steps_executed=m.steps_executed,
        stabilization_steps=stab,
        rounds_observed=len(m.rounds) if cell.protocol is not ProtocolKind.EPIDEMIC else None,
        min_length=min(lengths) if lengths else None,
        median_length=float(statistics.median(lengths)) if lengths else None,
        median_stretch=float(statistics.median(stretches)) if stretches else None,
        max_stretch=max(stretches) if stretches else None,
        epidemic_finish=m.epidemic_finish,
        random_step_fraction=fraction,
    )


def emit_csv(rows: Sequence[SummaryRow]) -> str:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.to_fields())
    return buf.getvalue()


def _opt_int(text: str) -> int | None:
    return int(text) if text else None


def _opt_float(text: str) -> float | None:
    return float(text) if text else None


def parse_summary_csv(text: str) -> tuple[SummaryRow, ...]:
    """Inverse of emit_csv; parse(emit(rows)) == rows."""
    reader = csv.reader(StringIO(text))
    header = next(reader, None)
    if header != list(CSV_HEADER):
        raise ValueError("summary CSV header does not match the fixed schema")
    rows = []
    for record in reader:
        if len(record) != len(CSV_HEADER):
            raise ValueError(f"summary row has {len(record)} fields, expected {len(CSV_HEADER)}")
        rows.append(
            SummaryRow(
                trial=int(record[0]),
                seed=int(record[1]),
                n=int(record[2]),
                p=float(record[3]),
                protocol=record[4],
                adversary=record[5],
                mode=record[6],
                steps_executed=int(record[7]),
                stabilization_steps=_opt_int(record[8]),
                rounds_observed=_opt_int(record[9]),
                min_length=_opt_int(record[10]),
                median_length=_opt_float(record[11]),
                median_stretch=_opt_float(record[12]),
                max_stretch=_opt_int(record[13]),
                epidemic_finish=_opt_int(record[14]),
                random_step_fraction=_opt_float(record[15]),
            )
        )
    return tuple(rows)


def emit_jsonl(steps: Sequence[ScheduleStep]) -> str:
    """Serialize a trace, one object per step; coin is null when no coin was drawn."""
    lines = []
    for s in steps:
        lines.append(
            json.dumps(
                {
                    "step": s.step_index,
                    "initiator": s.interaction.initiator,
                    "responder": s.interaction.responder,
                    "source": s.source.value,
                    "coin": s.coin,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True, slots=True)
class _TrialTask:
    """Everything one worker needs, in picklable primitives."""

    index: int
    trial: int
    seed: int
    n: int
    p: float
    protocol: str
    adversary: str
    mode: str
    constants: ProtocolConstants
    max_steps: int
    stop_on_stabilize: bool
    stop_after_rounds: int | None
    snapshot_stride: int | None
    trace: bool
    n_hint: int | None
    p_hint: float | None
    two_leader_rule: str

    def cell(self) -> Cell:
        return Cell(
            self.n, self.p, ProtocolKind(self.protocol), StrategySpec.from_label(self.adversary)
        )


def _run_task(task: _TrialTask) -> tuple[int, SummaryRow, str | None]:
    cell = task.cell()
    protocol = realize_protocol(
        cell,
        task.constants,
        task.seed,
        n_hint=task.n_hint,
        p_hint=task.p_hint,
        two_leader_rule=task.two_leader_rule,
    )
    result = run_trial(
        protocol,
        task.n,
        seed=task.seed,
        p=task.p,
        max_steps=task.max_steps,
        mode=RandomnessMode(task.mode),
        strategy=cell.adversary,
        stop_on_stabilize=task.stop_on_stabilize,
        stop_after_rounds=task.stop_after_rounds,
        snapshot_stride=task.snapshot_stride,
        trace=task.trace,
    )
    row = summarize_trial(task.trial, task.seed, cell, RandomnessMode(task.mode), result)
    trace_text = emit_jsonl(result.trace) if task.trace and result.trace is not None else None
    return task.index, row, trace_text


def _tasks_for(cfg: ExperimentConfig) -> list[_TrialTask]:
    tasks = []
    index = 0
    for cell in cfg.cells():
        for trial in range(cfg.trials):
            tasks.append(
                _TrialTask(
                    index=index,
                    trial=trial,
                    seed=cfg.base_seed + trial,
                    n=cell.n,
                    p=cell.p,
                    protocol=cell.protocol.value,
                    adversary=cell.adversary.label(),
                    mode=cfg.mode.value,
                    constants=cfg.constants,
                    max_steps=cfg.max_steps,
                    stop_on_stabilize=cfg.stop_on_stabilize,
                    stop_after_rounds=cfg.stop_after_rounds,
                    snapshot_stride=cfg.snapshot_stride,
                    trace=cfg.trace,
                    n_hint=cfg.n_hint,
                    p_hint=cfg.p_hint,
                    two_leader_rule=cfg.two_leader_rule,
                )
            )
            index += 1
    return tasks


def _task_label(task: _TrialTask) -> str:
    return (
        f"trial {task.trial} (n={task.n}, p={task.p}, protocol={task.protocol}, "
        f"adversary={task.adversary})"
    )


def trace_filename(row: SummaryRow) -> str:
    """Deterministic per-trial trace file name inside an output directory."""
    adv = row.adversary.replace("(", "-").replace(")", "").replace(",", "-")
    return (
        f"trace-{row.protocol}-n{row.n}-p{row.p}-{adv}-{row.mode}-trial{row.trial}.jsonl"
    )


def run_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    trace_sink=None,
) -> tuple[SummaryRow, ...]:
    """Run every trial of every cell and return rows in cell-major order.

    Workers beyond 1 dispatch trials to share-nothing processes; the row
    order and content are identical for any worker count.  When the config
    asks for traces, trace_sink(row, jsonl_text) is called once per trial
    in row order.  Scripts that pass workers > 1 must call this under an
    ``if __name__ == "__main__"`` guard, as with any use of multiprocessing
    in spawn mode.
    """
    tasks = _tasks_for(cfg)
    outputs: list[tuple[SummaryRow, str | None] | None] = [None] * len(tasks)

    if workers <= 1 or len(tasks) == 1:
        for task in tasks:
            try:
                index, row, trace_text = _run_task(task)
            except Exception as exc:
                raise TrialError(f"{_task_label(task)} failed: {exc}") from exc
            outputs[index] = (row, trace_text)
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(
            max_workers=min(workers, len(tasks)), mp_context=ctx
        ) as pool:
            futures = {pool.submit(_run_task, task): task for task in tasks}
            for future, task in futures.items():
                try:
                    index, row, trace_text = future.result()
                except Exception as exc:
                    raise TrialError(f"{_task_label(task)} failed: {exc}") from exc
                outputs[index] = (row, trace_text)

    rows = []
    for output in outputs:
        assert output is not None
        row, trace_text = output
        if trace_text is not None and trace_sink is not None:
            trace_sink(row, trace_text)
        rows.append(row)
    return tuple(rows)


def reproduce_row(cfg: ExperimentConfig, row: SummaryRow) -> SummaryRow:
    """Re-run the single trial a summary row came from, by its own seed."""
    task = _TrialTask(
        index=0,
        trial=row.trial,
        seed=row.seed,
        n=row.n,
        p=row.p,
        protocol=row.protocol,
        adversary=row.adversary,
        mode=row.mode,
        constants=cfg.constants,
        max_steps=cfg.max_steps,
        stop_on_stabilize=cfg.stop_on_stabilize,
        stop_after_rounds=cfg.stop_after_rounds,
        snapshot_stride=cfg.snapshot_stride,
        trace=False,
        n_hint=cfg.n_hint,
        p_hint=cfg.p_hint,
        two_leader_rule=cfg.two_leader_rule,
    )
    return _run_task(task)[1]


# ---------------------------------------------------------------------------
# Monte-Carlo oracles


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one observation")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True, slots=True)
class OracleEstimate:
    probability_hat: float
    ci_low: float
    ci_high: float


def oracle_lemma_ubmin(
    n: int,
    p: float,
    c: int,
    trials: int,
    seed: int,
    *,
    adversary: StrategySpec = StrategySpec(StrategyKind.NULL),
    gaps_per_trial: int = 1,
) -> OracleEstimate:
    """Estimate how often a frontier-minute gap exceeds c * n * ceil(log2 n) / p.

    Runs the full clock from all-synchronized populations and measures the
    spans between consecutive frontier-minute advances within the first
    round (measurement would restart at a round boundary, but each trial
    stops before reaching one).  The clock's second threshold is derived
    with the same slack constant c that scales the gap threshold; the two
    must move together for the probability floor 1 - c * 2^-c to apply.
    A trial cut off by the step cap still decides its pending gap when the
    elapsed span already exceeds the threshold; an undecided pending gap is
    dropped, not counted as failure.
    """
    if c <= 2:
        raise ValueError("the slack constant c must exceed 2")
    if trials < 100:
        raise ValueError("need at least 100 trials for a meaningful interval")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    clock = derive_clock_params(n, p, c=c)
    if not 1 <= gaps_per_trial <= clock.M - 1:
        raise ValueError(f"gaps_per_trial must lie in [1, {clock.M - 1}]")
    protocol = Protocol(kind=ProtocolKind.SMOOTHED_CLOCK, clock=clock)
    threshold = c * n * ceil_log2(n) / p
    cap = max(int(threshold * (gaps_per_trial + 2) * 12), 100_000)

    successes = 0
    total = 0
    for t in range(trials):
        result = run_trial(
            protocol,
            n,
            seed=seed + t,
            p=p,
            max_steps=cap,
            mode=RandomnessMode.COIN,
            strategy=adversary,
            stop_after_minute_events=gaps_per_trial,
            snapshot_stride=0,
        )
        events = [0]
        timelines = result.metrics.minute_timelines
        if timelines:
            for step in timelines[0].steps[1:]:
                if step is None:
                    break
                events.append(step)
        gaps = [b - a for a, b in zip(events, events[1:])][:gaps_per_trial]
        for gap in gaps:
            total += 1
            if gap > threshold:
                successes += 1
        if len(gaps) < gaps_per_trial:
            pending = result.metrics.steps_executed - events[-1]
            if pending > threshold:
                total += 1
                successes += 1
    low, high = wilson_interval(successes, total)
    return OracleEstimate(successes / total, low, high)


@dataclass(frozen=True, slots=True)
class HalvingEstimate:
    mean_ratio: float
    std_error: float
    exact_ratio: float


def oracle_leader_halving(L0: int, trials: int, seed: int) -> HalvingEstimate:
    """Simulate one round of the leader survivor process in isolation.

    Each of L0 leaders flips a fair coin; the heads-flippers survive unless
    every coin came up tails, in which case all L0 survive.  Returns the
    empirical mean of survivors / L0 next to the closed form 1/2 + 2^-L0.
    A single leader is a fixed point: the ratio is exactly 1, which the
    closed form also gives.
    """
    if L0 < 1:
        raise ValueError("need at least one leader")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    survivors = rng.binomial(L0, 0.5, size=trials)
    survivors[survivors == 0] = L0
    ratios = survivors / L0
    mean = float(ratios.mean())
    std_error = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return HalvingEstimate(mean, std_error, 0.5 + 2.0 ** (-L0))
