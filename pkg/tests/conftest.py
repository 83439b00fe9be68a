import random
from datetime import datetime, timedelta, timezone

import pytest

from traceq.eventlog import Event, EventLog, Status, Trace

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_trace(case_id, steps, gaps_s=None, start=EPOCH):
    """steps: list of (activity, Status) or plain activity strings."""
    norm = [(s, Status.NEUTRAL) if isinstance(s, str) else s for s in steps]
    gaps = gaps_s if gaps_s is not None else [60.0] * (len(norm) - 1)
    events = []
    t = start
    for i, (activity, status) in enumerate(norm):
        events.append(Event(case_id, activity, t, status))
        if i < len(gaps):
            t = t + timedelta(seconds=gaps[i])
    return Trace(case_id, tuple(events))


def make_log(traces):
    return EventLog(tuple(traces))


def random_log(rng: random.Random, n_traces=5, vocab=("A", "B", "C", "D", "E")):
    """Small random status-bearing log for property tests."""
    traces = []
    for i in range(n_traces):
        length = rng.randint(1, 6)
        steps = [
            (rng.choice(vocab), rng.choice((Status.APPROVED, Status.DISAPPROVED, Status.NEUTRAL)))
            for _ in range(length)
        ]
        gaps = [float(rng.randint(0, 5000)) for _ in range(length - 1)]
        start = EPOCH + timedelta(seconds=rng.randint(0, 10**6))
        traces.append(make_trace(f"case{i}", steps, gaps, start))
    return make_log(traces)


@pytest.fixture
def rng():
    return random.Random(1234)
