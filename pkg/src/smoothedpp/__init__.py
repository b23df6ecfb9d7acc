"""Population protocols under smoothed adversarial schedulers.

Simulation engine, baseline and robust phase clocks, a leader election
protocol driven by the robust clock, adaptive adversary strategies, and an
experiment harness with Monte-Carlo oracles for the probabilistic claims.
"""

from .adversaries import StrategyKind, StrategySpec, make_strategy
from .engine import (
    Configuration,
    SnapshotSeries,
    TrialResult,
    apply_step,
    derive_junta,
    new_population,
    replay_steps,
    run_trial,
)
from .experiments import (
    Cell,
    ConfigError,
    ExperimentConfig,
    HalvingEstimate,
    OracleEstimate,
    ProtocolConstants,
    SummaryRow,
    TrialError,
    emit_csv,
    emit_jsonl,
    oracle_leader_halving,
    oracle_lemma_ubmin,
    parse_config,
    parse_summary_csv,
    realize_protocol,
    reproduce_row,
    run_experiment,
    summarize_trial,
    trace_filename,
    wilson_interval,
)
from .metrics import (
    MetricsTracker,
    MinuteTimeline,
    RoundMetrics,
    StabilizationReport,
    TrialMetrics,
    V_HOUR_DECREASE,
    V_LEADER_GROWTH,
    V_MAX_JUMP,
    V_MAX_LEVEL_UNLED,
    V_MPRIME_JUMP,
    V_RANGE,
    violation_names,
)
from .protocols import (
    ClockParams,
    ClockState,
    JuntaClockState,
    LeaderParams,
    LeaderState,
    LeaderlessClockState,
    Protocol,
    ProtocolKind,
    ceil_log2,
    derive_clock_params,
    derive_leader_params,
    hour_compare,
)
from .schedulers import (
    AdversaryObservation,
    Interaction,
    RandomnessMode,
    ScheduleStep,
    SmoothingParams,
    StepSource,
    next_interaction,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryObservation",
    "Cell",
    "ClockParams",
    "ClockState",
    "ConfigError",
    "Configuration",
    "ExperimentConfig",
    "HalvingEstimate",
    "Interaction",
    "JuntaClockState",
    "LeaderParams",
    "LeaderState",
    "LeaderlessClockState",
    "MetricsTracker",
    "MinuteTimeline",
    "OracleEstimate",
    "Protocol",
    "ProtocolConstants",
    "ProtocolKind",
    "RandomnessMode",
    "RoundMetrics",
    "ScheduleStep",
    "SmoothingParams",
    "SnapshotSeries",
    "StabilizationReport",
    "StepSource",
    "StrategyKind",
    "StrategySpec",
    "SummaryRow",
    "TrialError",
    "TrialMetrics",
    "TrialResult",
    "V_HOUR_DECREASE",
    "V_LEADER_GROWTH",
    "V_MAX_JUMP",
    "V_MAX_LEVEL_UNLED",
    "V_MPRIME_JUMP",
    "V_RANGE",
    "apply_step",
    "ceil_log2",
    "derive_clock_params",
    "derive_junta",
    "derive_leader_params",
    "emit_csv",
    "emit_jsonl",
    "hour_compare",
    "make_strategy",
    "new_population",
    "next_interaction",
    "oracle_leader_halving",
    "oracle_lemma_ubmin",
    "parse_config",
    "parse_summary_csv",
    "realize_protocol",
    "replay_steps",
    "reproduce_row",
    "run_experiment",
    "run_trial",
    "summarize_trial",
    "trace_filename",
    "violation_names",
    "wilson_interval",
    "__version__",
]
