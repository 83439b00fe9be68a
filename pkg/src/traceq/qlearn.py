"""Tabular Q-learning over transition streams.

The table is a lazily-populated map (state -> action -> value); absent
entries read as zero.  Updates follow the stream order exactly, so a given
stream, table and hyperparameters always reproduce the same table bit for
bit.  Snapshots serialize to sorted JSON so two identical runs write
identical bytes.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import ConfigError, SnapshotError
from .mdp import StateKey, StateMode, Transition

SNAPSHOT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.1
    gamma: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")


def q_update(q: float, reward: float, max_next: float, hp: Hyperparams) -> float:
    """One temporal-difference step: q + alpha * (reward + gamma*max_next - q)."""
    for name, value in (("q", q), ("reward", reward), ("max_next", max_next)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite {name}: {value}")
    return q + hp.alpha * (reward + hp.gamma * max_next - q)


@dataclass
class StatSample:
    step: int
    mean_q: float
    moving_avg: float
    std: float


class TrainStats:
    """Mean-Q trajectory sampled every `interval` steps.

    The moving average and standard deviation at each sample cover the last
    min(samples_so_far, window) samples.
    """

    CSV_HEADER = ("step", "mean_q", "moving_avg", "std")

    def __init__(self, interval: int = 100, window: int = 500):
        if interval < 1 or window < 1:
            raise ConfigError("stats interval and window must be >= 1")
        self.interval = interval
        self.window = window
        self.samples: list[StatSample] = []

    def record(self, step: int, mean_q: float) -> None:
        if self.samples and step <= self.samples[-1].step:
            raise ValueError("stats step indices must strictly increase")
        recent = [s.mean_q for s in self.samples[-(self.window - 1):]] + [mean_q]
        self.samples.append(
            StatSample(
                step=step,
                mean_q=mean_q,
                moving_avg=statistics.fmean(recent),
                std=statistics.pstdev(recent),
            )
        )

    @property
    def final_mean_q(self) -> float:
        return self.samples[-1].mean_q if self.samples else 0.0

    @property
    def final_moving_avg(self) -> float:
        return self.samples[-1].moving_avg if self.samples else 0.0

    def csv_rows(self) -> Iterator[tuple]:
        for s in self.samples:
            yield (s.step, s.mean_q, s.moving_avg, s.std)


class QTable:
    """State/action value table plus training metadata."""

    def __init__(
        self,
        mode: StateMode,
        vocabulary: Iterable[str] = (),
        hyperparams: Optional[Hyperparams] = None,
    ):
        self.mode = mode
        self.vocabulary = tuple(sorted(set(vocabulary)))
        self.hyperparams = hyperparams or Hyperparams()
        self.steps = 0
        self._entries: dict[StateKey, dict[str, float]] = {}

    def get(self, state: StateKey, action: str) -> float:
        return self._entries.get(state, {}).get(action, 0.0)

    def set(self, state: StateKey, action: str, value: float) -> None:
        if not math.isfinite(value):
            raise ValueError(f"refusing to store non-finite Q value {value}")
        self._entries.setdefault(state, {})[action] = value

    def actions(self, state: StateKey) -> dict[str, float]:
        return dict(self._entries.get(state, {}))

    def max_value(self, state: StateKey) -> float:
        values = self._entries.get(state)
        return max(values.values()) if values else 0.0

    def states(self) -> Iterator[StateKey]:
        return iter(self._entries)

    def entry_count(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def items(self) -> Iterator[tuple[StateKey, str, float]]:
        for state, actions in self._entries.items():
            for action, value in actions.items():
                yield state, action, value

    def copy(self) -> "QTable":
        clone = QTable(self.mode, self.vocabulary, self.hyperparams)
        clone.steps = self.steps
        clone._entries = {s: dict(a) for s, a in self._entries.items()}
        return clone

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.mode is other.mode
            and self.vocabulary == other.vocabulary
            and self._entries == other._entries
        )

    # -- persistence ---------------------------------------------------

    def to_json(self) -> str:
        entries = [
            {"state": state.to_string(), "action": action, "q": value}
            for state, action, value in self.items()
        ]
        entries.sort(key=lambda e: (e["state"], e["action"]))
        doc = {
            "format_version": SNAPSHOT_FORMAT_VERSION,
            "metadata": {
                "mode": self.mode.value,
                "vocabulary": list(self.vocabulary),
                "hyperparams": {
                    "alpha": self.hyperparams.alpha,
                    "gamma": self.hyperparams.gamma,
                    "seed": self.hyperparams.seed,
                },
                "steps": self.steps,
            },
            "entries": entries,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"snapshot is not valid JSON: {exc}") from exc
        version = doc.get("format_version")
        if version != SNAPSHOT_FORMAT_VERSION:
            raise SnapshotError(
                f"snapshot format version {version!r} unsupported "
                f"(expected {SNAPSHOT_FORMAT_VERSION})"
            )
        meta = doc["metadata"]
        table = cls(
            StateMode(meta["mode"]),
            meta.get("vocabulary", ()),
            Hyperparams(**meta["hyperparams"]),
        )
        table.steps = int(meta.get("steps", 0))
        for entry in doc["entries"]:
            table.set(StateKey.from_string(entry["state"]), entry["action"], entry["q"])
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "QTable":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
        return cls.from_json(text)


def mean_q(table: QTable) -> float:
    """Arithmetic mean over all stored (state, action) entries; 0.0 if empty."""
    total, count = 0.0, 0
    for _, _, value in table.items():
        total += value
        count += 1
    return total / count if count else 0.0


def train_offline(
    episodes: Iterable[Transition],
    hp: Hyperparams,
    table: QTable,
    stats_interval: int = 100,
    ma_window: int = 500,
    stats: Optional[TrainStats] = None,
) -> tuple[QTable, TrainStats]:
    """Apply one q_update per transition, in stream order.

    Terminal transitions back up against a zero future value.  The table's
    global step counter keeps increasing across calls, so a fine-tune phase
    can continue where pre-training stopped.
    """
    stats = stats or TrainStats(stats_interval, ma_window)
    for transition in episodes:
        if transition.state.mode is not table.mode:
            raise ConfigError(
                f"episode state mode {transition.state.mode.value!r} does not "
                f"match table mode {table.mode.value!r}"
            )
        current = table.get(transition.state, transition.action.activity)
        max_next = 0.0 if transition.terminal else table.max_value(transition.next_state)
        updated = q_update(current, transition.reward, max_next, hp)
        table.set(transition.state, transition.action.activity, updated)
        table.steps += 1
        if table.steps % stats.interval == 0:
            stats.record(table.steps, mean_q(table))
    if table.steps and (not stats.samples or stats.samples[-1].step < table.steps):
        stats.record(table.steps, mean_q(table))
    return table, stats
