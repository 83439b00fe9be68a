"""Event-log ingestion: parsing, validation, outcome labeling, train/test split.

The event log is the single source of truth for everything downstream.  All
types here are immutable once built; a parsed log can be shared freely across
threads.
"""

from __future__ import annotations

import csv
import io
import random
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional

from .errors import ConfigError, EmptyLogError, RowError, SchemaError
from .rules import Rule, parse_rule

CANONICAL_COLUMNS = ("case_id", "activity", "timestamp", "status")


class Status(Enum):
    APPROVED = "Approved"
    DISAPPROVED = "Disapproved"
    NEUTRAL = "Neutral"


class Outcome(Enum):
    DESIRED = "Desired"
    UNDESIRED = "Undesired"


@dataclass(frozen=True)
class OutcomeLabel:
    """Trace-level label: the categorical outcome plus a wasted-effort measure.

    `continuous` is a wasted-activity count (unit="activities") or a wasted
    duration in seconds (unit="seconds").  A desired trace wastes nothing.
    """

    categorical: Outcome
    continuous: float = 0.0
    unit: str = "activities"

    def __post_init__(self):
        if self.continuous < 0:
            raise ValueError("continuous outcome must be non-negative")
        if self.categorical is Outcome.DESIRED and self.continuous != 0:
            raise ValueError("a desired outcome has zero wasted effort")


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: datetime
    status: Status = Status.NEUTRAL
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.activity:
            raise ValueError("activity must be non-empty")
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        else:
            ts = ts.astimezone(timezone.utc)
        # Millisecond precision: truncate sub-millisecond detail.
        ts = ts.replace(microsecond=(ts.microsecond // 1000) * 1000)
        object.__setattr__(self, "timestamp", ts)


@dataclass(frozen=True)
class Trace:
    """Time-ordered events of one case.  Ties keep original file order."""

    case_id: str
    events: tuple[Event, ...]
    outcome: Optional[OutcomeLabel] = None

    def __post_init__(self):
        if len(self.events) < 1:
            raise ValueError(f"trace {self.case_id!r} has no events")
        object.__setattr__(
            self, "events", tuple(sorted(self.events, key=lambda e: e.timestamp))
        )

    def __len__(self) -> int:
        return len(self.events)

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    @property
    def duration_seconds(self) -> float:
        return (self.events[-1].timestamp - self.events[0].timestamp).total_seconds()


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...]

    def __len__(self) -> int:
        return len(self.traces)

    @property
    def event_count(self) -> int:
        return sum(len(t) for t in self.traces)

    def vocabulary(self) -> tuple[str, ...]:
        """Distinct activity labels, sorted."""
        return tuple(sorted({e.activity for t in self.traces for e in t.events}))

    def has_statuses(self) -> bool:
        return any(e.status is not Status.NEUTRAL for t in self.traces for e in t.events)


@dataclass(frozen=True)
class LogSchema:
    """Column mapping plus the declarative outcome rule for one dataset."""

    case_column: str = "case_id"
    activity_column: str = "activity"
    timestamp_column: str = "timestamp"
    timestamp_format: Optional[str] = None  # strptime format; None = ISO-8601
    status_column: Optional[str] = None
    delimiter: str = ","
    outcome_rule: Optional[Rule] = None

    @classmethod
    def from_dict(cls, cfg: dict) -> "LogSchema":
        rule = cfg.get("outcome")
        return cls(
            case_column=cfg.get("case_column", "case_id"),
            activity_column=cfg.get("activity_column", "activity"),
            timestamp_column=cfg.get("timestamp_column", "timestamp"),
            timestamp_format=cfg.get("timestamp_format"),
            status_column=cfg.get("status_column"),
            delimiter=cfg.get("delimiter", ","),
            outcome_rule=parse_rule(rule) if rule is not None else None,
        )


def _parse_timestamp(text: str, fmt: Optional[str]) -> datetime:
    if fmt is not None:
        return datetime.strptime(text, fmt)
    # ISO-8601; Python 3.10's fromisoformat rejects a trailing 'Z'.
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    return datetime.fromisoformat(cleaned)


def _parse_status(text: str, line: int) -> Status:
    cleaned = text.strip()
    if not cleaned:
        return Status.NEUTRAL
    for status in Status:
        if cleaned.lower() == status.value.lower():
            return status
    raise RowError(line, f"unknown status value {text!r}")


def parse_csv(data: bytes | str, schema: LogSchema) -> EventLog:
    """Parse CSV text into an EventLog: one trace per case, events time-sorted.

    Raises SchemaError for a missing mapped column, RowError (with line
    number) for an unparseable row, EmptyLogError when no events exist.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.DictReader(io.StringIO(text), delimiter=schema.delimiter)
    if reader.fieldnames is None:
        raise EmptyLogError("input has no header row")

    header = list(reader.fieldnames)
    required = [schema.case_column, schema.activity_column, schema.timestamp_column]
    if schema.status_column:
        required.append(schema.status_column)
    for column in required:
        if column not in header:
            raise SchemaError(f"column {column!r} not found in header {header}")

    mapped = {schema.case_column, schema.activity_column, schema.timestamp_column,
              schema.status_column}
    extra_columns = [c for c in header if c not in mapped]

    by_case: dict[str, list[Event]] = {}
    for i, row in enumerate(reader):
        line = i + 2  # header occupies line 1
        case_id = (row.get(schema.case_column) or "").strip()
        activity = (row.get(schema.activity_column) or "").strip()
        raw_ts = (row.get(schema.timestamp_column) or "").strip()
        if not case_id:
            raise RowError(line, "empty case id")
        if not activity:
            raise RowError(line, "empty activity")
        try:
            ts = _parse_timestamp(raw_ts, schema.timestamp_format)
        except ValueError as exc:
            raise RowError(line, f"unparseable timestamp {raw_ts!r}: {exc}") from exc
        status = Status.NEUTRAL
        if schema.status_column:
            status = _parse_status(row.get(schema.status_column) or "", line)
        extra = {c: row[c] for c in extra_columns if row.get(c) not in (None, "")}
        by_case.setdefault(case_id, []).append(
            Event(case_id, activity, ts, status, extra)
        )

    if not by_case:
        raise EmptyLogError("input contains a header but no event rows")
    traces = tuple(Trace(case_id, tuple(events)) for case_id, events in by_case.items())
    return EventLog(traces)


def serialize_csv(log: EventLog) -> str:
    """Canonical CSV form: case_id, activity, timestamp, status, then any
    extra attribute columns (sorted).  Re-parsing yields an equal log."""
    extra_keys = sorted({k for t in log.traces for e in t.events for k in e.extra})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CANONICAL_COLUMNS) + extra_keys)
    for trace in log.traces:
        for event in trace.events:
            ts = event.timestamp.isoformat(timespec="milliseconds")
            row = [event.case_id, event.activity, ts, event.status.value]
            row.extend(event.extra.get(k, "") for k in extra_keys)
            writer.writerow(row)
    return buf.getvalue()


def canonical_schema() -> LogSchema:
    """Schema matching :func:`serialize_csv` output."""
    return LogSchema(status_column="status")


def label_outcomes(log: EventLog, schema: LogSchema) -> EventLog:
    """Attach an OutcomeLabel to every trace per the schema's outcome rule.

    Wasted-activity counts follow the rule's trigger event: everything
    strictly after it is wasted; rules without a trigger charge the whole
    trace (or report wasted seconds directly).
    """
    rule = schema.outcome_rule
    if rule is None:
        raise ConfigError("schema has no outcome rule; cannot label outcomes")
    known = set()
    for trace in log.traces:
        known.update(trace.activities)
    unknown = rule.referenced_activities() - known
    if unknown:
        raise ConfigError(
            f"outcome rule references activities absent from the log: {sorted(unknown)}"
        )

    labeled = []
    for trace in log.traces:
        report = rule.evaluate(trace)
        if not report.fired:
            label = OutcomeLabel(Outcome.DESIRED)
        elif report.wasted_seconds is not None:
            label = OutcomeLabel(Outcome.UNDESIRED, report.wasted_seconds, unit="seconds")
        elif report.trigger_index is not None:
            wasted = len(trace.events) - report.trigger_index - 1
            label = OutcomeLabel(Outcome.UNDESIRED, float(wasted))
        else:
            label = OutcomeLabel(Outcome.UNDESIRED, float(len(trace.events)))
        labeled.append(replace(trace, outcome=label))
    return EventLog(tuple(labeled))


def label_outcomes_from_status(log: EventLog) -> EventLog:
    """Derive trace labels from per-task statuses: any disapproval makes the
    trace undesired, wasting every activity after the first disapproved one."""
    labeled = []
    for trace in log.traces:
        fail = next(
            (i for i, e in enumerate(trace.events) if e.status is Status.DISAPPROVED),
            None,
        )
        if fail is None:
            label = OutcomeLabel(Outcome.DESIRED)
        else:
            label = OutcomeLabel(Outcome.UNDESIRED, float(len(trace.events) - fail - 1))
        labeled.append(replace(trace, outcome=label))
    return EventLog(tuple(labeled))


def split_train_test(
    log: EventLog, train_fraction: float, seed: int
) -> tuple[EventLog, EventLog]:
    """Split by trace (never by event), deterministically for a fixed seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if len(log) == 0:
        raise EmptyLogError("cannot split an empty log")
    indices = list(range(len(log.traces)))
    random.Random(seed).shuffle(indices)
    n_train = int(round(train_fraction * len(indices)))
    n_train = min(max(n_train, 0), len(indices))
    train_idx = sorted(indices[:n_train])
    test_idx = sorted(indices[n_train:])
    if not train_idx or not test_idx:
        warnings.warn(
            f"split produced an empty side (train={len(train_idx)}, "
            f"test={len(test_idx)}); too few traces for fraction {train_fraction}"
        )
    train = EventLog(tuple(log.traces[i] for i in train_idx))
    test = EventLog(tuple(log.traces[i] for i in test_idx))
    return train, test


def build_log(rows: Iterable[tuple], outcomes: Optional[dict[str, OutcomeLabel]] = None) -> EventLog:
    """Assemble a log from (case_id, activity, timestamp[, status[, extra]]) tuples.

    Convenience constructor for fixtures and tests.
    """
    by_case: dict[str, list[Event]] = {}
    for row in rows:
        case_id, activity, ts = row[0], row[1], row[2]
        status = row[3] if len(row) > 3 else Status.NEUTRAL
        extra = row[4] if len(row) > 4 else {}
        by_case.setdefault(case_id, []).append(Event(case_id, activity, ts, status, extra))
    traces = []
    for case_id, events in by_case.items():
        outcome = outcomes.get(case_id) if outcomes else None
        traces.append(Trace(case_id, tuple(events), outcome))
    return EventLog(tuple(traces))
