"""Shipped synthetic fixtures: small deterministic logs used by the test
suite, demos, and the frontend's fixture service."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .eventlog import Event, EventLog, Status, Trace
from .mdp import StateKey, StateMode
from .qlearn import Hyperparams, QTable

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


def _trace(case_id: str, steps: list[tuple[str, Status]], gaps_s: list[float]) -> Trace:
    """Build a trace from (activity, status) steps; gaps_s[i] separates event
    i from event i+1."""
    assert len(gaps_s) == len(steps) - 1 or not gaps_s
    events = []
    t = EPOCH
    for i, (activity, status) in enumerate(steps):
        events.append(Event(case_id, activity, t, status))
        if i < len(gaps_s):
            t = t + timedelta(seconds=gaps_s[i])
    return Trace(case_id, tuple(events))


def toy_status_log() -> EventLog:
    """Three short traces with per-task statuses; the hand-traceable training
    fixture (two passes of it are simulated step by step in the tests)."""
    a, d = Status.APPROVED, Status.DISAPPROVED
    return EventLog(
        (
            _trace("t1", [("A", a), ("B", a), ("C", d)], [60, 60]),
            _trace("t2", [("B", a), ("C", a)], [60]),
            _trace("t3", [("C", a), ("A", d)], [60]),
        )
    )


def bottleneck_log(n_traces: int = 5000, fail_rate: float = 0.8, seed: int = 42) -> EventLog:
    """Random orderings of four activities where C disapproves `fail_rate` of
    the time and everything else is always approved.

    The expected wasted work of an ordering is fail_rate * (position of C),
    so any C-first ordering is optimal.
    """
    rng = random.Random(seed)
    traces = []
    for i in range(n_traces):
        order = ["A", "B", "C", "D"]
        rng.shuffle(order)
        c_fails = rng.random() < fail_rate
        steps = []
        for activity in order:
            status = Status.DISAPPROVED if activity == "C" and c_fails else Status.APPROVED
            steps.append((activity, status))
        traces.append(_trace(f"case{i:05d}", steps, [3600.0] * 3))
    return EventLog(tuple(traces))


def finetune_fixture_log(seed: int = 7) -> EventLog:
    """A small approval log whose augmented stream reaches state/action pairs
    the raw log never visits: 30 traces drawn from a 6-activity vocabulary,
    each trace executing a subset in a stereotyped order, occasional
    disapprovals near the end."""
    rng = random.Random(seed)
    vocabulary = ["P1", "P2", "P3", "P4", "P5", "P6"]
    traces = []
    for i in range(30):
        size = rng.randint(3, 6)
        chosen = sorted(rng.sample(vocabulary, size))  # stereotyped order
        steps = []
        for j, activity in enumerate(chosen):
            fails = j == len(chosen) - 1 and rng.random() < 0.2
            steps.append((activity, Status.DISAPPROVED if fails else Status.APPROVED))
        gaps = [float(rng.randint(600, 7200)) for _ in range(len(steps) - 1)]
        traces.append(_trace(f"ft{i:03d}", steps, gaps))
    return EventLog(tuple(traces))


def kpi_fixture() -> tuple[EventLog, QTable, float]:
    """Ten hand-built traces plus a hand-built remaining-set policy table that
    prescribes Z before X before Y.  Returns (log, table, last_duration_s);
    the expected savings are frozen in the test suite's golden file."""
    a, d = Status.APPROVED, Status.DISAPPROVED
    log = EventLog(
        (
            _trace("T01", [("X", a), ("Y", a), ("Z", d)], [200, 300]),
            _trace("T02", [("X", a), ("Z", d), ("Y", a)], [100, 50]),
            _trace("T03", [("X", a), ("Y", a), ("Z", a)], [100, 100]),
            _trace("T04", [("Z", d)], []),
            _trace("T05", [("Y", a), ("X", d)], [400]),
            _trace("T06", [("Z", a), ("X", a), ("Y", a)], [100, 200]),
            _trace("T07", [("Y", a), ("Z", a), ("X", d)], [300, 200]),
            _trace("T08", [("X", d), ("Y", a)], [50]),
            _trace("T09", [("X", a), ("X", a), ("Y", d)], [100, 200]),
            _trace("T10", [("Z", a), ("Y", d), ("X", a)], [500, 100]),
        )
    )
    table = QTable(StateMode.REMAINING, ("X", "Y", "Z"), Hyperparams())
    entries = {
        ("X", "Y", "Z"): {"Z": 3.0, "X": 1.0, "Y": 0.5},
        ("X", "Y"): {"X": 2.0, "Y": 1.0},
        ("X", "Z"): {"Z": 2.0, "X": 1.0},
        ("Y", "Z"): {"Z": 2.0, "Y": 1.0},
        ("X",): {"X": 1.0},
        ("Y",): {"Y": 1.0},
        ("Z",): {"Z": 1.0},
    }
    for activities, actions in entries.items():
        state = StateKey.remaining(activities)
        for action, q in actions.items():
            table.set(state, action, q)
    return log, table, 100.0


def distance_fixture() -> EventLog:
    """Labeled traces for the distance protocol tests."""
    from .eventlog import Outcome, OutcomeLabel

    a = Status.NEUTRAL
    desired = OutcomeLabel(Outcome.DESIRED)
    t1 = _trace("d1", [("A", a), ("B", a), ("C", a)], [60, 60])
    t2 = _trace("d2", [("A", a), ("C", a), ("B", a)], [60, 60])
    t3 = _trace("u1", [("B", a), ("A", a), ("C", a), ("D", a)], [60, 60, 60])
    t4 = _trace("u2", [("D", a), ("C", a)], [60])
    return EventLog(
        (
            Trace(t1.case_id, t1.events, desired),
            Trace(t2.case_id, t2.events, desired),
            Trace(t3.case_id, t3.events, OutcomeLabel(Outcome.UNDESIRED, 1.0)),
            Trace(t4.case_id, t4.events, OutcomeLabel(Outcome.UNDESIRED, 1.0)),
        )
    )


CASE_STUDY_ACTIVITIES = (
    "AGR", "ARR", "CNR", "CRR", "DPER", "FER", "FN", "FNC", "FR", "LHR", "PER", "REV",
)


def ui_fixture_table() -> QTable:
    """Remaining-set snapshot over the twelve review activities, with a
    deterministic Q spread so every prefix of choices still gets rankings."""
    table = QTable(StateMode.REMAINING, CASE_STUDY_ACTIVITIES, Hyperparams())
    labels = list(CASE_STUDY_ACTIVITIES)
    # Elimination order: the reverse of the label list, so rankings are easy
    # to predict in tests.
    remaining = list(labels)
    rank_bonus = {label: i for i, label in enumerate(labels)}
    while remaining:
        state = StateKey.remaining(remaining)
        for label in remaining:
            table.set(state, label, 1.0 + 0.1 * rank_bonus[label])
        remaining.pop()  # drop the lexicographically-last remaining label
    return table


def write_ui_fixture_snapshot(path: str | Path) -> None:
    Path(path).write_text(ui_fixture_table().to_json(), encoding="utf-8")
