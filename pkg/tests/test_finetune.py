import pytest

from traceq.augment import AugmentConfig
from traceq.errors import ConfigError
from traceq.finetune import PipelineConfig, compare_runs, run_isolated, run_pipeline
from traceq.fixtures import finetune_fixture_log
from traceq.mdp import RewardConfig, RewardMode, StateMode, episodes_from_log
from traceq.qlearn import Hyperparams


def pipeline_config(**overrides):
    defaults = dict(
        state_mode=StateMode.REMAINING,
        reward=RewardConfig(mode=RewardMode.PER_TASK_STATUS),
        hyperparams=Hyperparams(alpha=0.1, gamma=0.9, seed=0),
        augment=AugmentConfig(target_transitions=2000, seed=13),
        offline_passes=2,
        stats_interval=50,
        ma_window=100,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


@pytest.fixture(scope="module")
def log():
    return finetune_fixture_log()


def test_pipeline_has_two_phases(log):
    result = run_pipeline(log, pipeline_config())
    assert [p.name for p in result.report.phases] == ["offline", "finetune"]


def test_offline_only_flag_gives_single_phase(log):
    result = run_pipeline(log, pipeline_config(offline_only=True))
    assert [p.name for p in result.report.phases] == ["offline"]
    assert result.report.improvement_ratio is None


def test_no_reset_property(log):
    cfg = pipeline_config()
    combined = run_pipeline(log, cfg)
    offline_only = run_pipeline(log, pipeline_config(offline_only=True))
    # the boundary snapshot equals an offline-only run, entry for entry
    assert combined.offline_table == offline_only.table


def test_budget_accounting(log):
    cfg = pipeline_config()
    offline_transitions = sum(
        1 for _ in episodes_from_log(log, cfg.state_mode, cfg.reward)
    )
    result = run_pipeline(log, cfg)
    expected = offline_transitions * cfg.offline_passes + cfg.augment.target_transitions
    assert result.table.steps == expected
    assert sum(p.steps for p in result.report.phases) == expected


def test_pipeline_deterministic(log):
    cfg = pipeline_config()
    first = run_pipeline(log, cfg)
    second = run_pipeline(log, cfg)
    assert first.table.to_json() == second.table.to_json()
    assert first.report.to_dict() == second.report.to_dict()


def test_finetune_improves_on_fixture(log):
    result = run_pipeline(log, pipeline_config())
    offline, finetune = result.report.phases
    assert finetune.final_moving_avg >= offline.final_moving_avg
    assert result.report.improvement_ratio is not None
    assert result.report.improvement_ratio == pytest.approx(
        finetune.final_moving_avg / offline.final_moving_avg - 1.0
    )


def test_finetune_reaches_unvisited_entries(log):
    result = run_pipeline(log, pipeline_config())
    offline, finetune = result.report.phases
    assert finetune.table_entries > offline.table_entries


def test_isolated_starts_fresh(log):
    result = run_isolated(log, pipeline_config())
    assert [p.name for p in result.report.phases] == ["isolated"]
    assert result.report.phases[0].steps == 2000
    assert result.offline_table is None


def test_isolated_below_pipeline_on_fixture(log):
    cfg = pipeline_config(augment=AugmentConfig(target_transitions=5000, seed=13),
                          offline_passes=5)
    combined = run_pipeline(log, cfg)
    isolated = run_isolated(log, cfg)
    assert combined.report.phases[-1].final_moving_avg \
        > isolated.report.phases[-1].final_moving_avg


def test_isolated_seed_changes_trajectory(log):
    cfg_a = pipeline_config()
    cfg_b = pipeline_config(augment=AugmentConfig(target_transitions=2000, seed=14))
    a = run_isolated(log, cfg_a)
    b = run_isolated(log, cfg_b)
    assert a.table.to_json() != b.table.to_json()


def test_offline_passes_validated():
    with pytest.raises(ConfigError):
        pipeline_config(offline_passes=0)


# -- compare_runs ---------------------------------------------------------------


def test_compare_identical_runs_zero_diff(log):
    cfg = pipeline_config()
    a = run_pipeline(log, cfg).report
    b = run_pipeline(log, cfg).report
    comparison = compare_runs({"a": a, "b": b})
    assert comparison.finals["a"] == comparison.finals["b"]
    for row in comparison.rows:
        assert row[1] == row[2]


def test_compare_requires_two_reports(log):
    report = run_pipeline(log, pipeline_config()).report
    with pytest.raises(ValueError):
        compare_runs({"only": report})


def test_compare_orders_fixture_runs(log):
    cfg = pipeline_config()
    combined = run_pipeline(log, cfg).report
    offline = run_pipeline(log, pipeline_config(offline_only=True)).report
    comparison = compare_runs({"combined": combined, "offline": offline})
    assert comparison.finals["combined"] > comparison.finals["offline"]


def test_compare_resamples_mismatched_intervals(log):
    fine = run_pipeline(log, pipeline_config(stats_interval=50)).report
    coarse = run_pipeline(log, pipeline_config(stats_interval=100)).report
    with pytest.warns(UserWarning, match="resampling"):
        comparison = compare_runs({"fine": fine, "coarse": coarse})
    assert all(row[0] % 100 == 0 for row in comparison.rows)
