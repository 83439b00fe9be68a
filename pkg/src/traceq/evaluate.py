"""Policy evaluation: sequential replay KPIs and token edit distance.

Replay compares the recorded execution of each test trace against the order
the policy would have prescribed, charging the time of every approved
activity that preceded a disapproval as wasted work.  Both schedules are
evaluated as strictly sequential executions of the observed durations.

The distance protocol scores recommended activity sequences against ground
truth with the Damerau-Levenshtein distance over whole activity tokens,
reported separately for desired and undesired traces.
"""

from __future__ import annotations

import csv
import io
import statistics
import warnings
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .eventlog import EventLog, Outcome, Status, Trace
from .policy import Policy, rollout

DAY_SECONDS = 86400.0


def damerau_levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance with insertions, deletions, substitutions and
    transpositions, over arbitrary token sequences.

    This is the unrestricted variant (a transposed pair may be edited again
    later), which is a true metric — the restricted "optimal string
    alignment" shortcut would violate the triangle inequality.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    last_row_of: dict = {}  # token -> last row in `a` where it occurred
    inf = la + lb
    d = [[inf] * (lb + 2) for _ in range(la + 2)]
    for i in range(la + 1):
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[1][j + 1] = j

    for i in range(1, la + 1):
        last_col = 0  # last column in this row where tokens matched
        for j in range(1, lb + 1):
            row = last_row_of.get(b[j - 1], 0)
            col = last_col
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_col = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,  # substitution / match
                d[i + 1][j] + 1,  # insertion
                d[i][j + 1] + 1,  # deletion
                d[row][col] + (i - row - 1) + 1 + (j - col - 1),  # transposition
            )
        last_row_of[a[i - 1]] = i
    return d[la + 1][lb + 1]


@dataclass(frozen=True)
class ScheduleItem:
    activity: str
    duration_s: float
    status: Status

    def __post_init__(self):
        if self.duration_s < 0:
            raise ValueError("durations must be non-negative")


@dataclass(frozen=True)
class ReplaySchedule:
    """Sequential execution plan: ordered activities with observed durations."""

    items: tuple[ScheduleItem, ...]

    @property
    def failure_index(self) -> Optional[int]:
        for i, item in enumerate(self.items):
            if item.status is Status.DISAPPROVED:
                return i
        return None

    @property
    def span_s(self) -> float:
        """Sequential duration up to and including the failure (or the whole case)."""
        fail = self.failure_index
        upto = len(self.items) if fail is None else fail + 1
        return sum(item.duration_s for item in self.items[:upto])

    @property
    def wasted_s(self) -> float:
        """Time spent on approved work before the first disapproval."""
        fail = self.failure_index
        if fail is None:
            return 0.0
        return sum(
            item.duration_s
            for item in self.items[:fail]
            if item.status is Status.APPROVED
        )


def activity_durations(trace: Trace, last_duration_s: float) -> list[float]:
    """Duration of each activity: gap to the next event; the last one has no
    successor and takes the supplied default."""
    durations = []
    for current, following in zip(trace.events, trace.events[1:]):
        durations.append((following.timestamp - current.timestamp).total_seconds())
    durations.append(last_duration_s)
    return durations


def median_activity_duration(log: EventLog) -> float:
    """Median inter-event gap across the whole log; the stand-in duration for
    final events."""
    gaps = [
        (nxt.timestamp - cur.timestamp).total_seconds()
        for trace in log.traces
        for cur, nxt in zip(trace.events, trace.events[1:])
    ]
    return statistics.median(gaps) if gaps else 0.0


def replay_trace(
    trace: Trace, policy: Policy, last_duration_s: float
) -> tuple[ReplaySchedule, ReplaySchedule]:
    """(actual, prescribed) schedules over the same activity/duration/status multiset."""
    durations = activity_durations(trace, last_duration_s)
    actual_items = tuple(
        ScheduleItem(e.activity, d, e.status) for e, d in zip(trace.events, durations)
    )
    # The prescribed order consumes each activity's observed executions FIFO.
    queues: dict[str, list[ScheduleItem]] = {}
    for item in actual_items:
        queues.setdefault(item.activity, []).append(item)
    order = rollout(policy, [e.activity for e in trace.events]).sequence
    prescribed_items = tuple(queues[activity].pop(0) for activity in order)
    return ReplaySchedule(actual_items), ReplaySchedule(prescribed_items)


@dataclass(frozen=True)
class ReplayPair:
    case_id: str
    actual: ReplaySchedule
    prescribed: ReplaySchedule


@dataclass(frozen=True)
class TraceKpi:
    case_id: str
    n_activities: int
    saved_resource_s: float
    saved_span_s: float


@dataclass(frozen=True)
class KpiReport:
    per_trace: tuple[TraceKpi, ...]
    total_saved_resource_s: float
    total_saved_span_s: float
    baseline_activity_time_s: float
    baseline_case_span_s: float
    saved_resource_per_activity_s: float
    saved_span_per_case_s: float
    resource_opt_pct: float
    span_opt_pct: float

    def to_dict(self) -> dict:
        return {
            "per_trace": [
                {
                    "case_id": t.case_id,
                    "n_activities": t.n_activities,
                    "saved_resource_s": t.saved_resource_s,
                    "saved_span_s": t.saved_span_s,
                }
                for t in self.per_trace
            ],
            "totals": {
                "saved_resource_s": self.total_saved_resource_s,
                "saved_span_s": self.total_saved_span_s,
            },
            "baseline": {
                "activity_time_s": self.baseline_activity_time_s,
                "activity_time_days": self.baseline_activity_time_s / DAY_SECONDS,
                "case_span_s": self.baseline_case_span_s,
                "case_span_days": self.baseline_case_span_s / DAY_SECONDS,
            },
            "summary": {
                "saved_resource_per_activity_s": self.saved_resource_per_activity_s,
                "saved_resource_per_activity_days":
                    self.saved_resource_per_activity_s / DAY_SECONDS,
                "resource_opt_pct": self.resource_opt_pct,
                "saved_span_per_case_s": self.saved_span_per_case_s,
                "saved_span_per_case_days": self.saved_span_per_case_s / DAY_SECONDS,
                "span_opt_pct": self.span_opt_pct,
            },
        }

    def csv_rows(self):
        """Summary rows in the saved-resource / saved-span layout."""
        yield ("metric", "days", "opt_pct")
        yield (
            "saved_resource_time_per_activity",
            self.saved_resource_per_activity_s / DAY_SECONDS,
            self.resource_opt_pct,
        )
        yield (
            "saved_time_span_per_case",
            self.saved_span_per_case_s / DAY_SECONDS,
            self.span_opt_pct,
        )
        yield ("baseline_per_activity", self.baseline_activity_time_s / DAY_SECONDS, "")
        yield ("baseline_per_case", self.baseline_case_span_s / DAY_SECONDS, "")


def kpi_aggregate(pairs: Sequence[ReplayPair]) -> KpiReport:
    """Fold per-trace replay pairs into the KPI report."""
    if not pairs:
        raise ValueError("kpi_aggregate requires at least one replay pair")
    per_trace = []
    total_resource = 0.0
    total_span = 0.0
    total_activity_time = 0.0
    total_actual_span = 0.0
    n_activities = 0
    for pair in pairs:
        saved_resource = pair.actual.wasted_s - pair.prescribed.wasted_s
        saved_span = pair.actual.span_s - pair.prescribed.span_s
        per_trace.append(
            TraceKpi(pair.case_id, len(pair.actual.items), saved_resource, saved_span)
        )
        total_resource += saved_resource
        total_span += saved_span
        total_activity_time += sum(i.duration_s for i in pair.actual.items)
        total_actual_span += pair.actual.span_s
        n_activities += len(pair.actual.items)
    baseline_activity = total_activity_time / n_activities if n_activities else 0.0
    baseline_span = total_actual_span / len(pairs)
    resource_per_activity = total_resource / n_activities if n_activities else 0.0
    span_per_case = total_span / len(pairs)
    return KpiReport(
        per_trace=tuple(per_trace),
        total_saved_resource_s=total_resource,
        total_saved_span_s=total_span,
        baseline_activity_time_s=baseline_activity,
        baseline_case_span_s=baseline_span,
        saved_resource_per_activity_s=resource_per_activity,
        saved_span_per_case_s=span_per_case,
        resource_opt_pct=100.0 * resource_per_activity / baseline_activity
        if baseline_activity else 0.0,
        span_opt_pct=100.0 * span_per_case / baseline_span if baseline_span else 0.0,
    )


class Recommender(Protocol):
    def recommend_path(self, trace: Trace) -> Optional[list[str]]:
        """Recommended activity sequence for the trace, or None when unavailable."""


class PolicyRecommender:
    """Built-in recommender: a full greedy rollout over the trace's activities."""

    def __init__(self, policy: Policy):
        self.policy = policy

    def recommend_path(self, trace: Trace) -> Optional[list[str]]:
        return list(rollout(self.policy, [e.activity for e in trace.events]).sequence)


class CsvRecommender:
    """External recommendations from (case_id, position, activity) CSV rows."""

    def __init__(self, text: str):
        reader = csv.DictReader(io.StringIO(text))
        required = {"case_id", "position", "activity"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(
                "recommender CSV needs columns case_id, position, activity; "
                f"got {reader.fieldnames}"
            )
        rows: dict[str, list[tuple[int, str]]] = {}
        for row in reader:
            rows.setdefault(row["case_id"], []).append(
                (int(row["position"]), row["activity"])
            )
        self.paths = {
            case: [activity for _, activity in sorted(entries)]
            for case, entries in rows.items()
        }

    def recommend_path(self, trace: Trace) -> Optional[list[str]]:
        return self.paths.get(trace.case_id)


@dataclass(frozen=True)
class GroupDistance:
    mean: Optional[float]  # None when the group is empty, never 0 by default
    count: int


@dataclass(frozen=True)
class SourceDistances:
    desired: GroupDistance
    undesired: GroupDistance
    excluded: int


@dataclass(frozen=True)
class DistanceReport:
    sources: dict[str, SourceDistances] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            name: {
                "desired_mean": s.desired.mean,
                "desired_count": s.desired.count,
                "undesired_mean": s.undesired.mean,
                "undesired_count": s.undesired.count,
                "excluded": s.excluded,
            }
            for name, s in self.sources.items()
        }

    def csv_rows(self):
        yield ("source", "desired_mean", "undesired_mean", "excluded")
        for name in sorted(self.sources):
            s = self.sources[name]
            yield (
                name,
                "" if s.desired.mean is None else s.desired.mean,
                "" if s.undesired.mean is None else s.undesired.mean,
                s.excluded,
            )


def distance_eval(test: EventLog, recommenders: dict[str, Recommender]) -> DistanceReport:
    """Mean recommended-vs-actual distance per outcome group, per recommender."""
    report: dict[str, SourceDistances] = {}
    for name, recommender in recommenders.items():
        groups: dict[Outcome, list[int]] = {Outcome.DESIRED: [], Outcome.UNDESIRED: []}
        excluded = 0
        for trace in test.traces:
            if trace.outcome is None:
                raise ValueError(f"test trace {trace.case_id!r} is unlabeled")
            path = recommender.recommend_path(trace)
            if path is None:
                warnings.warn(f"{name}: no recommendation for case {trace.case_id!r}; excluded")
                excluded += 1
                continue
            distance = damerau_levenshtein(tuple(path), trace.activities)
            groups[trace.outcome.categorical].append(distance)
        report[name] = SourceDistances(
            desired=_group(groups[Outcome.DESIRED]),
            undesired=_group(groups[Outcome.UNDESIRED]),
            excluded=excluded,
        )
    return DistanceReport(report)


def _group(distances: list[int]) -> GroupDistance:
    if not distances:
        return GroupDistance(mean=None, count=0)
    return GroupDistance(mean=statistics.fmean(distances), count=len(distances))
