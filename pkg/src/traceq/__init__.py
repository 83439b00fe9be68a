"""traceq: next-best-activity recommendations from business-process event logs.

Learn tabular Q-values from historical traces, improve them by fine-tuning on
an augmented log, and serve ranked next activities via library, CLI or HTTP.
"""

__version__ = "0.1.0"

from .eventlog import (
    Event,
    EventLog,
    LogSchema,
    Outcome,
    OutcomeLabel,
    Status,
    Trace,
    label_outcomes,
    parse_csv,
    serialize_csv,
    split_train_test,
)
from .mdp import (
    ActionId,
    RewardConfig,
    RewardMode,
    StateKey,
    StateMode,
    Transition,
    Vocabulary,
    episodes_from_log,
)
from .qlearn import Hyperparams, QTable, TrainStats, mean_q, q_update, train_offline
from .augment import AugmentConfig, AugmentedLog, synthesize_stream
from .finetune import PipelineConfig, RunReport, compare_runs, run_isolated, run_pipeline
from .policy import FallbackRule, Policy, Recommendation, best_action, rank_actions, rollout
from .evaluate import damerau_levenshtein, distance_eval, kpi_aggregate, replay_trace

__all__ = [
    "ActionId",
    "AugmentConfig",
    "AugmentedLog",
    "Event",
    "EventLog",
    "FallbackRule",
    "Hyperparams",
    "LogSchema",
    "Outcome",
    "OutcomeLabel",
    "PipelineConfig",
    "Policy",
    "QTable",
    "Recommendation",
    "RewardConfig",
    "RewardMode",
    "RunReport",
    "StateKey",
    "StateMode",
    "Status",
    "Trace",
    "TrainStats",
    "Transition",
    "Vocabulary",
    "best_action",
    "compare_runs",
    "damerau_levenshtein",
    "distance_eval",
    "episodes_from_log",
    "kpi_aggregate",
    "label_outcomes",
    "mean_q",
    "parse_csv",
    "q_update",
    "rank_actions",
    "replay_trace",
    "rollout",
    "run_isolated",
    "run_pipeline",
    "serialize_csv",
    "split_train_test",
    "synthesize_stream",
    "train_offline",
]
