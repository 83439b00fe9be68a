"""Trace-to-episode encoding: states, actions, rewards, transition tuples.

Two state encodings are supported and chosen per dataset:

* ``remaining``: the set of activities still to execute (order-canonical, so
  any permutation of the same remaining work is one state).
* ``prefix``: the exact sequence executed so far.

Episodes replay the log's recorded order — the behavior policy is the order
in which the process actually ran.  The environment's transition model is
never materialized; everything is derived from data.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Union

from .errors import ConfigError
from .eventlog import EventLog, Outcome, Status, Trace


class StateMode(Enum):
    REMAINING = "remaining"
    PREFIX = "prefix"


class RewardMode(Enum):
    PER_TASK_STATUS = "per_task_status"
    TRACE_OUTCOME = "trace_outcome"


@dataclass(frozen=True)
class StateKey:
    """Canonical, hashable MDP state.

    `activities` is sorted for REMAINING mode (set semantics) and kept in
    execution order for PREFIX mode.
    """

    mode: StateMode
    activities: tuple[str, ...]

    @classmethod
    def remaining(cls, activities: Iterable[str]) -> "StateKey":
        return cls(StateMode.REMAINING, tuple(sorted(set(activities))))

    @classmethod
    def prefix(cls, activities: Iterable[str]) -> "StateKey":
        return cls(StateMode.PREFIX, tuple(activities))

    @property
    def is_terminal_remaining(self) -> bool:
        return self.mode is StateMode.REMAINING and not self.activities

    def to_string(self) -> str:
        """Stable text form used in snapshots: ``<mode>:<JSON array>``."""
        return f"{self.mode.value}:{json.dumps(list(self.activities))}"

    @classmethod
    def from_string(cls, text: str) -> "StateKey":
        mode_name, _, payload = text.partition(":")
        mode = StateMode(mode_name)
        activities = json.loads(payload)
        if mode is StateMode.REMAINING:
            return cls.remaining(activities)
        return cls.prefix(activities)


class ActionId(NamedTuple):
    """Interned activity handle: integer id plus its label."""

    id: int
    activity: str


class Vocabulary:
    """Bijection between activity labels and dense integer ids."""

    def __init__(self, labels: Iterable[str]):
        self._labels = tuple(sorted(set(labels)))
        self._ids = {label: i for i, label in enumerate(self._labels)}

    @classmethod
    def from_log(cls, log: EventLog) -> "Vocabulary":
        return cls(log.vocabulary())

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def action(self, label: str) -> ActionId:
        return ActionId(self._ids[label], label)

    def label_of(self, action_id: int) -> str:
        return self._labels[action_id]


@dataclass(frozen=True)
class RewardConfig:
    """Reward shaping knobs.

    PER_TASK_STATUS uses each event's approval status; TRACE_OUTCOME derives
    every step's reward from the trace-level label.  `importance` optionally
    weights penalties per activity (default weight 1).
    """

    base_reward: float = 1.0
    mode: RewardMode = RewardMode.PER_TASK_STATUS
    position_penalty: bool = True
    importance: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.base_reward <= 0:
            raise ConfigError("base_reward must be positive")


@dataclass(frozen=True)
class Transition:
    state: StateKey
    action: ActionId
    reward: float
    next_state: StateKey
    terminal: bool


def encode_state(
    executed: Iterable[str], remaining: Iterable[str], mode: StateMode
) -> StateKey:
    """Canonical state for a trace in progress."""
    if mode is StateMode.REMAINING:
        return StateKey.remaining(remaining)
    return StateKey.prefix(executed)


def reward(
    signal: Union[Status, Outcome],
    prior_completed: int,
    cfg: RewardConfig,
    importance: float = 1.0,
) -> float:
    """Reward for choosing an action.

    Per-task mode: an approved task earns +r; a disapproved one costs
    r times the number of activities already completed (everything done so
    far was rendered futile).  Trace-outcome mode: every action of a desired
    trace earns +r; in an undesired trace each action is penalized by its
    1-based position, so late effort costs the most.
    """
    if prior_completed < 0:
        raise ValueError("prior_completed must be non-negative")
    r = cfg.base_reward
    if cfg.mode is RewardMode.PER_TASK_STATUS:
        if not isinstance(signal, Status):
            raise ConfigError(f"per-task reward mode requires a Status, got {signal!r}")
        if signal is Status.APPROVED:
            return r
        if signal is Status.DISAPPROVED:
            return -r * prior_completed * importance
        return 0.0
    if not isinstance(signal, Outcome):
        raise ConfigError(f"trace-outcome reward mode requires an Outcome, got {signal!r}")
    if signal is Outcome.DESIRED:
        return r
    if cfg.position_penalty:
        return -r * (prior_completed + 1) * importance
    return -r * importance


def _episode_plan(trace: Trace, mode: StateMode) -> list:
    """Events to execute, collapsing duplicate activities in REMAINING mode."""
    if mode is StateMode.PREFIX:
        return list(trace.events)
    seen: set[str] = set()
    plan = []
    duplicates = []
    for event in trace.events:
        if event.activity in seen:
            duplicates.append(event.activity)
            continue
        seen.add(event.activity)
        plan.append(event)
    if duplicates:
        warnings.warn(
            f"trace {trace.case_id!r}: duplicate activities {sorted(set(duplicates))} "
            "collapsed to first occurrence under remaining-set mode; "
            "prefix mode is recommended for loopy logs"
        )
    return plan


def episodes_from_log(
    log: EventLog,
    mode: StateMode,
    cfg: RewardConfig,
    vocabulary: Optional[Vocabulary] = None,
) -> Iterator[Transition]:
    """One episode per trace, actions in recorded order, last step terminal."""
    vocab = vocabulary or Vocabulary.from_log(log)
    if cfg.mode is RewardMode.PER_TASK_STATUS and not log.has_statuses():
        raise ConfigError(
            "per-task reward mode needs a status column; this log has none "
            "(use trace_outcome mode with labeled traces instead)"
        )
    for trace in log.traces:
        if cfg.mode is RewardMode.TRACE_OUTCOME and trace.outcome is None:
            raise ConfigError(
                f"trace {trace.case_id!r} is unlabeled; run outcome labeling first"
            )
        yield from _trace_episode(trace, mode, cfg, vocab)


def _trace_episode(
    trace: Trace, mode: StateMode, cfg: RewardConfig, vocab: Vocabulary
) -> Iterator[Transition]:
    plan = _episode_plan(trace, mode)
    executed: list[str] = []
    remaining = [e.activity for e in plan]
    for step, event in enumerate(plan):
        state = encode_state(executed, remaining, mode)
        signal = event.status if cfg.mode is RewardMode.PER_TASK_STATUS \
            else trace.outcome.categorical
        step_reward = reward(
            signal, step, cfg, importance=cfg.importance.get(event.activity, 1.0)
        )
        executed.append(event.activity)
        remaining.remove(event.activity)
        next_state = encode_state(executed, remaining, mode)
        action = vocab.action(event.activity) if event.activity in vocab \
            else ActionId(-1, event.activity)
        yield Transition(
            state=state,
            action=action,
            reward=step_reward,
            next_state=next_state,
            terminal=step == len(plan) - 1,
        )
