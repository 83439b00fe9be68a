import random
from datetime import datetime, timedelta, timezone

import pytest

from traceq.errors import ConfigError, EmptyLogError, RowError, SchemaError
from traceq.eventlog import (
    LogSchema,
    Outcome,
    OutcomeLabel,
    Status,
    canonical_schema,
    label_outcomes,
    label_outcomes_from_status,
    parse_csv,
    serialize_csv,
    split_train_test,
)
from traceq.rules import parse_rule

from conftest import EPOCH, make_log, make_trace, random_log

SCHEMA = LogSchema()


def test_parse_groups_by_case():
    text = (
        "case_id,activity,timestamp\n"
        "c1,A,2024-01-01T00:00:00Z\n"
        "c2,B,2024-01-01T00:01:00Z\n"
        "c1,C,2024-01-01T00:02:00Z\n"
    )
    log = parse_csv(text, SCHEMA)
    assert len(log) == 2
    assert log.event_count == 3


def test_parse_sorts_events_within_trace():
    text = (
        "case_id,activity,timestamp\n"
        "c1,LATER,2024-01-01T05:00:00Z\n"
        "c1,EARLIER,2024-01-01T01:00:00Z\n"
    )
    log = parse_csv(text, SCHEMA)
    assert log.traces[0].activities == ("EARLIER", "LATER")


def test_parse_tie_break_keeps_file_order():
    text = (
        "case_id,activity,timestamp\n"
        "c1,FIRST,2024-01-01T00:00:00Z\n"
        "c1,SECOND,2024-01-01T00:00:00Z\n"
    )
    log = parse_csv(text, SCHEMA)
    assert log.traces[0].activities == ("FIRST", "SECOND")


def test_parse_missing_column_names_it():
    with pytest.raises(SchemaError, match="activity"):
        parse_csv("case_id,timestamp\nc1,2024-01-01T00:00:00Z\n", SCHEMA)


def test_parse_bad_timestamp_reports_line():
    text = (
        "case_id,activity,timestamp\n"
        "c1,A,2024-01-01T00:00:00Z\n"
        "c1,B,not-a-time\n"
    )
    with pytest.raises(RowError, match="line 3"):
        parse_csv(text, SCHEMA)


def test_parse_empty_inputs():
    with pytest.raises(EmptyLogError):
        parse_csv("", SCHEMA)
    with pytest.raises(EmptyLogError):
        parse_csv("case_id,activity,timestamp\n", SCHEMA)


def test_parse_custom_format_and_status():
    schema = LogSchema(timestamp_format="%d/%m/%Y %H:%M", status_column="status")
    text = (
        "case_id,activity,timestamp,status\n"
        "c1,A,02/01/2024 10:30,Approved\n"
        "c1,B,02/01/2024 11:30,disapproved\n"
        "c1,C,02/01/2024 12:30,\n"
    )
    log = parse_csv(text, schema)
    statuses = [e.status for e in log.traces[0].events]
    assert statuses == [Status.APPROVED, Status.DISAPPROVED, Status.NEUTRAL]


def test_parse_unknown_status_rejected():
    schema = LogSchema(status_column="status")
    text = "case_id,activity,timestamp,status\nc1,A,2024-01-01T00:00:00Z,maybe\n"
    with pytest.raises(RowError, match="maybe"):
        parse_csv(text, schema)


def test_extra_columns_preserved():
    text = "case_id,activity,timestamp,channel\nc1,A,2024-01-01T00:00:00Z,web\n"
    log = parse_csv(text, SCHEMA)
    assert log.traces[0].events[0].extra == {"channel": "web"}


def test_timestamps_truncated_to_milliseconds():
    text = "case_id,activity,timestamp\nc1,A,2024-01-01T00:00:00.123456+00:00\n"
    log = parse_csv(text, SCHEMA)
    assert log.traces[0].events[0].timestamp.microsecond == 123000


def test_round_trip_equality():
    rng = random.Random(5)
    log = random_log(rng, n_traces=6)
    text = serialize_csv(log)
    reparsed = parse_csv(text, canonical_schema())
    assert serialize_csv(reparsed) == text
    assert {t.case_id for t in reparsed.traces} == {t.case_id for t in log.traces}
    assert reparsed.event_count == log.event_count


def test_trace_partition_conserves_rows():
    rng = random.Random(9)
    log = random_log(rng, n_traces=8)
    text = serialize_csv(log)
    rows = text.strip().splitlines()[1:]
    reparsed = parse_csv(text, canonical_schema())
    assert sum(len(t) for t in reparsed.traces) == len(rows)


# -- outcome labeling --------------------------------------------------------


def sepsis_schema():
    return LogSchema(
        outcome_rule=parse_rule(
            {"contains_within": {"activity": "Return ER", "anchor": "Release A", "days": 28}}
        )
    )


def test_label_return_within_window_is_undesired():
    trace = make_trace(
        "p1",
        ["ER Registration", "Release A", "Return ER"],
        gaps_s=[3600, 10 * 86400.0],
    )
    log = label_outcomes(make_log([trace]), sepsis_schema())
    assert log.traces[0].outcome.categorical is Outcome.UNDESIRED


def test_label_return_outside_window_is_desired():
    trace = make_trace(
        "p2",
        ["ER Registration", "Release A", "Return ER"],
        gaps_s=[3600, 29 * 86400.0],
    )
    log = label_outcomes(make_log([trace]), sepsis_schema())
    assert log.traces[0].outcome.categorical is Outcome.DESIRED
    assert log.traces[0].outcome.continuous == 0


def test_label_wasted_count_after_trigger():
    # five activities, the third fires the rule -> the two after it are wasted
    schema = LogSchema(outcome_rule=parse_rule({"contains": {"activity": "FAIL"}}))
    trace = make_trace("c1", ["A", "B", "FAIL", "D", "E"])
    log = label_outcomes(make_log([trace]), schema)
    assert log.traces[0].outcome == OutcomeLabel(Outcome.UNDESIRED, 2.0)


def test_label_unknown_activity_is_config_error():
    schema = LogSchema(outcome_rule=parse_rule({"contains": {"activity": "GHOST"}}))
    with pytest.raises(ConfigError, match="GHOST"):
        label_outcomes(make_log([make_trace("c1", ["A"])]), schema)


def test_labeling_is_pure():
    schema = LogSchema(outcome_rule=parse_rule({"contains": {"activity": "B"}}))
    log = make_log([make_trace("c1", ["A", "B", "C"])])
    first = label_outcomes(log, schema)
    second = label_outcomes(log, schema)
    assert first.traces[0].outcome == second.traces[0].outcome


def test_duration_rule_reports_wasted_seconds():
    schema = LogSchema(outcome_rule=parse_rule({"duration_exceeds": {"days": 1}}))
    trace = make_trace("c1", ["A", "B"], gaps_s=[2 * 86400.0])
    log = label_outcomes(make_log([trace]), schema)
    label = log.traces[0].outcome
    assert label.categorical is Outcome.UNDESIRED
    assert label.unit == "seconds"
    assert label.continuous == pytest.approx(86400.0)


def test_not_rule_charges_whole_trace():
    schema = LogSchema(outcome_rule=parse_rule({"not": {"contains": {"activity": "Payment"}}}))
    log = make_log(
        [make_trace("paid", ["Create", "Payment"]), make_trace("unpaid", ["Create", "Remind"])]
    )
    labeled = label_outcomes(log, schema)
    by_case = {t.case_id: t.outcome for t in labeled.traces}
    assert by_case["paid"].categorical is Outcome.DESIRED
    assert by_case["unpaid"].categorical is Outcome.UNDESIRED
    assert by_case["unpaid"].continuous == 2.0


def test_outcome_label_invariants():
    with pytest.raises(ValueError):
        OutcomeLabel(Outcome.DESIRED, 3.0)  # desired wastes nothing
    with pytest.raises(ValueError):
        OutcomeLabel(Outcome.UNDESIRED, -1.0)
    OutcomeLabel(Outcome.UNDESIRED, 2.0)


def test_label_from_status():
    log = make_log(
        [
            make_trace("ok", [("A", Status.APPROVED), ("B", Status.APPROVED)]),
            make_trace("bad", [("A", Status.APPROVED), ("B", Status.DISAPPROVED), ("C", Status.APPROVED)]),
        ]
    )
    labeled = label_outcomes_from_status(log)
    by_case = {t.case_id: t.outcome for t in labeled.traces}
    assert by_case["ok"] == OutcomeLabel(Outcome.DESIRED)
    assert by_case["bad"] == OutcomeLabel(Outcome.UNDESIRED, 1.0)


# -- split -------------------------------------------------------------------


def ten_trace_log():
    return make_log([make_trace(f"c{i}", ["A", "B"]) for i in range(10)])


def test_split_80_20():
    train, test = split_train_test(ten_trace_log(), 0.8, seed=3)
    assert (len(train), len(test)) == (8, 2)


def test_split_deterministic():
    log = ten_trace_log()
    first = split_train_test(log, 0.8, seed=3)
    second = split_train_test(log, 0.8, seed=3)
    assert [t.case_id for t in first[0].traces] == [t.case_id for t in second[0].traces]
    assert [t.case_id for t in first[1].traces] == [t.case_id for t in second[1].traces]


def test_split_never_splits_a_trace():
    train, test = split_train_test(ten_trace_log(), 0.5, seed=1)
    overlap = {t.case_id for t in train.traces} & {t.case_id for t in test.traces}
    assert not overlap
    assert len(train) + len(test) == 10


def test_split_single_trace_warns():
    log = make_log([make_trace("only", ["A"])])
    with pytest.warns(UserWarning, match="empty side"):
        train, test = split_train_test(log, 0.8, seed=0)
    assert (len(train), len(test)) == (1, 0)


def test_split_bad_fraction():
    with pytest.raises(ValueError):
        split_train_test(ten_trace_log(), 1.2, seed=0)
    with pytest.raises(ValueError):
        split_train_test(ten_trace_log(), 0.0, seed=0)
