import pytest
from hypothesis import given, strategies as st

from traceq.errors import ConfigError
from traceq.eventlog import Outcome, OutcomeLabel, Status, Trace
from traceq.mdp import (
    RewardConfig,
    RewardMode,
    StateKey,
    StateMode,
    Vocabulary,
    encode_state,
    episodes_from_log,
    reward,
)

from conftest import make_log, make_trace

PER_TASK = RewardConfig(base_reward=1.0, mode=RewardMode.PER_TASK_STATUS)
A, D, N = Status.APPROVED, Status.DISAPPROVED, Status.NEUTRAL


# -- state encoding ----------------------------------------------------------


def test_remaining_set_is_order_canonical():
    assert StateKey.remaining(["FR", "ARR"]) == StateKey.remaining(["ARR", "FR"])


def test_prefix_preserves_order():
    key = StateKey.prefix(["ER Registration", "ER Triage", "ER Sepsis Triage"])
    assert key.activities == ("ER Registration", "ER Triage", "ER Sepsis Triage")
    assert len(key.activities) == 3
    assert key != StateKey.prefix(["ER Triage", "ER Registration", "ER Sepsis Triage"])


def test_empty_remaining_is_terminal():
    key = StateKey.remaining([])
    assert key.is_terminal_remaining
    assert key.activities == ()


def test_encode_state_dispatch():
    assert encode_state(["A"], ["C", "B"], StateMode.REMAINING) == StateKey.remaining(["B", "C"])
    assert encode_state(["A"], ["C", "B"], StateMode.PREFIX) == StateKey.prefix(["A"])


def test_state_string_round_trip():
    for key in (StateKey.remaining(["B", "A"]), StateKey.prefix(["B", "A", "B"])):
        assert StateKey.from_string(key.to_string()) == key


@given(st.lists(st.sampled_from("ABCDE"), max_size=6))
def test_remaining_key_ignores_permutation(activities):
    import random as _random

    shuffled = list(activities)
    _random.Random(0).shuffle(shuffled)
    assert StateKey.remaining(activities) == StateKey.remaining(shuffled)


# -- reward ------------------------------------------------------------------


def test_approved_earns_base_reward():
    assert reward(A, 0, PER_TASK) == 1.0
    assert reward(A, 7, PER_TASK) == 1.0


def test_disapproved_costs_prior_work():
    assert reward(D, 3, PER_TASK) == -3.0
    assert reward(D, 0, PER_TASK) == 0.0


def test_neutral_is_zero():
    assert reward(N, 2, PER_TASK) == 0.0


def test_trace_outcome_rewards():
    cfg = RewardConfig(base_reward=2.0, mode=RewardMode.TRACE_OUTCOME)
    assert reward(Outcome.DESIRED, 4, cfg) == 2.0
    # 1-based position: prior 2 => position 3
    assert reward(Outcome.UNDESIRED, 2, cfg) == -6.0
    flat = RewardConfig(base_reward=2.0, mode=RewardMode.TRACE_OUTCOME, position_penalty=False)
    assert reward(Outcome.UNDESIRED, 2, flat) == -2.0


def test_importance_scales_penalties_only():
    assert reward(D, 2, PER_TASK, importance=3.0) == -6.0
    assert reward(A, 2, PER_TASK, importance=3.0) == 1.0


def test_reward_signal_type_checked():
    with pytest.raises(ConfigError):
        reward(Outcome.DESIRED, 0, PER_TASK)


# -- episodes ----------------------------------------------------------------


def test_two_step_trace_yields_two_transitions():
    log = make_log([make_trace("id2", [("CRR", A), ("FER", A)])])
    transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    assert len(transitions) == 2
    assert not transitions[0].terminal
    assert transitions[1].terminal
    assert transitions[1].next_state.is_terminal_remaining


def test_single_event_trace_is_one_terminal_transition():
    log = make_log([make_trace("solo", [("X", A)])])
    (transition,) = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    assert transition.terminal


def test_all_approved_episode_shrinks_states():
    log = make_log([make_trace("t", [("A", A), ("B", A), ("C", A)])])
    transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    assert [t.reward for t in transitions] == [1.0, 1.0, 1.0]
    states = [t.state.activities for t in transitions] + [transitions[-1].next_state.activities]
    assert states == [("A", "B", "C"), ("B", "C"), ("C",), ()]


def test_episode_rewards_follow_recorded_order():
    log = make_log([make_trace("t", [("A", A), ("B", D), ("C", A)])])
    transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    # B disapproves with one prior completed activity
    assert [t.reward for t in transitions] == [1.0, -1.0, 1.0]


def test_prefix_episode_grows_prefix():
    log = make_log([make_trace("t", [("A", A), ("B", A)])])
    transitions = list(episodes_from_log(log, StateMode.PREFIX, PER_TASK))
    assert transitions[0].state == StateKey.prefix([])
    assert transitions[0].next_state == StateKey.prefix(["A"])
    assert transitions[1].next_state == StateKey.prefix(["A", "B"])
    assert transitions[1].terminal


def test_duplicates_collapse_with_warning_in_remaining_mode():
    log = make_log([make_trace("loop", [("A", A), ("B", A), ("A", A)])])
    with pytest.warns(UserWarning, match="duplicate"):
        transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    assert len(transitions) == 2  # second A collapsed into the first


def test_duplicates_kept_in_prefix_mode():
    log = make_log([make_trace("loop", [("A", A), ("B", A), ("A", A)])])
    transitions = list(episodes_from_log(log, StateMode.PREFIX, PER_TASK))
    assert len(transitions) == 3


def test_trace_outcome_requires_labels():
    cfg = RewardConfig(mode=RewardMode.TRACE_OUTCOME)
    log = make_log([make_trace("t", ["A"])])
    with pytest.raises(ConfigError, match="unlabeled"):
        list(episodes_from_log(log, StateMode.REMAINING, cfg))


def test_per_task_requires_statuses():
    log = make_log([make_trace("t", ["A", "B"])])  # all Neutral
    with pytest.raises(ConfigError, match="status"):
        list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))


def test_trace_outcome_position_penalties():
    cfg = RewardConfig(mode=RewardMode.TRACE_OUTCOME)
    base = make_trace("bad", ["A", "B", "C"])
    trace = Trace(base.case_id, base.events, OutcomeLabel(Outcome.UNDESIRED, 1.0))
    transitions = list(episodes_from_log(make_log([trace]), StateMode.REMAINING, cfg))
    # later activities receive higher penalties: positions 1, 2, 3
    assert [t.reward for t in transitions] == [-1.0, -2.0, -3.0]


# -- properties --------------------------------------------------------------


@given(st.data())
def test_state_count_bound_under_remaining_mode(data):
    import random as _random

    seed = data.draw(st.integers(0, 10_000))
    rng = _random.Random(seed)
    from conftest import random_log

    log = random_log(rng, n_traces=6, vocab=("A", "B", "C", "D"))
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK)) \
            if log.has_statuses() else []
    states = {t.state for t in transitions} | {t.next_state for t in transitions}
    assert len(states) <= 2 ** 4


def test_episode_reward_sum_for_all_approved_trace():
    log = make_log([make_trace("t", [("A", A), ("B", A), ("C", A), ("D", A)])])
    transitions = list(episodes_from_log(log, StateMode.REMAINING, PER_TASK))
    assert sum(t.reward for t in transitions) == 4 * 1.0


def test_removing_action_shrinks_payload_by_one():
    log = make_log([make_trace("t", [("A", A), ("B", A), ("C", A)])])
    for t in episodes_from_log(log, StateMode.REMAINING, PER_TASK):
        assert len(t.next_state.activities) == len(t.state.activities) - 1


def test_vocabulary_bijection():
    vocab = Vocabulary(["B", "A", "C", "A"])
    assert vocab.labels == ("A", "B", "C")
    for i, label in enumerate(vocab.labels):
        assert vocab.action(label) == (i, label)
        assert vocab.label_of(i) == label
    assert "Z" not in vocab
