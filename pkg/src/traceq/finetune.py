"""Pipeline orchestration: offline pre-training on the real log, then
continued updates on a synthesized augmented stream, with per-phase stats.

The pre-trained table is snapshotted at the phase boundary and never reset,
so fine-tuning picks up exactly where offline training stopped.  A brief dip
in mean Q right after the boundary is expected — augmentation deliberately
visits state/action pairs the original log never produced.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .augment import AugmentConfig, synthesize_stream
from .eventlog import EventLog
from .errors import ConfigError
from .mdp import RewardConfig, StateMode, Vocabulary, episodes_from_log
from .qlearn import Hyperparams, QTable, TrainStats, mean_q, train_offline


@dataclass(frozen=True)
class PipelineConfig:
    state_mode: StateMode = StateMode.REMAINING
    reward: RewardConfig = field(default_factory=RewardConfig)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    offline_passes: int = 1
    stats_interval: int = 100
    ma_window: int = 500
    offline_only: bool = False

    def __post_init__(self):
        if self.offline_passes < 1:
            raise ConfigError("offline_passes must be >= 1")
        if self.stats_interval < 1 or self.ma_window < 1:
            raise ConfigError("stats_interval and ma_window must be >= 1")


@dataclass(frozen=True)
class PhaseReport:
    name: str
    steps: int
    final_mean_q: float
    final_moving_avg: float
    table_entries: int
    stats: TrainStats
    wall_clock_s: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "steps": self.steps,
            "final_mean_q": self.final_mean_q,
            "final_moving_avg": self.final_moving_avg,
            "table_entries": self.table_entries,
        }


@dataclass(frozen=True)
class RunReport:
    phases: tuple[PhaseReport, ...]
    improvement_ratio: Optional[float]

    def phase(self, name: str) -> PhaseReport:
        for p in self.phases:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        # Wall-clock times are reported separately (timing_dict): run reports
        # must be byte-identical across reruns of the same config.
        return {
            "phases": [p.to_dict() for p in self.phases],
            "improvement_ratio": self.improvement_ratio,
        }

    def timing_dict(self) -> dict:
        return {p.name: p.wall_clock_s for p in self.phases}


@dataclass(frozen=True)
class PipelineResult:
    table: QTable
    report: RunReport
    offline_table: Optional[QTable]  # the offline->finetune boundary snapshot


def _run_phase(name: str, episodes, hp, table, cfg: PipelineConfig) -> PhaseReport:
    started = time.perf_counter()
    before = table.steps
    _, stats = train_offline(
        episodes, hp, table, stats_interval=cfg.stats_interval, ma_window=cfg.ma_window
    )
    return PhaseReport(
        name=name,
        steps=table.steps - before,
        final_mean_q=mean_q(table),
        final_moving_avg=stats.final_moving_avg,
        table_entries=table.entry_count(),
        stats=stats,
        wall_clock_s=time.perf_counter() - started,
    )


def _improvement(offline: PhaseReport, finetune: PhaseReport) -> Optional[float]:
    if offline.final_moving_avg == 0.0:
        return None
    return finetune.final_moving_avg / offline.final_moving_avg - 1.0


def run_pipeline(log: EventLog, cfg: PipelineConfig) -> PipelineResult:
    """Offline pre-training for `offline_passes` passes, snapshot, fine-tune."""
    vocab = Vocabulary.from_log(log)
    table = QTable(cfg.state_mode, vocab.labels, cfg.hyperparams)

    def offline_episodes():
        for _ in range(cfg.offline_passes):
            yield from episodes_from_log(log, cfg.state_mode, cfg.reward, vocab)

    phases = [_run_phase("offline", offline_episodes(), cfg.hyperparams, table, cfg)]
    boundary = table.copy()
    if cfg.offline_only:
        return PipelineResult(table, RunReport(tuple(phases), None), boundary)

    stream = synthesize_stream(log, cfg.augment, cfg.state_mode, cfg.reward, vocab)
    phases.append(_run_phase("finetune", stream, cfg.hyperparams, table, cfg))
    report = RunReport(tuple(phases), _improvement(phases[0], phases[1]))
    return PipelineResult(table, report, boundary)


def run_isolated(log: EventLog, cfg: PipelineConfig) -> PipelineResult:
    """Baseline: train a fresh table on the augmented stream only."""
    vocab = Vocabulary.from_log(log)
    table = QTable(cfg.state_mode, vocab.labels, cfg.hyperparams)
    stream = synthesize_stream(log, cfg.augment, cfg.state_mode, cfg.reward, vocab)
    phases = (_run_phase("isolated", stream, cfg.hyperparams, table, cfg),)
    return PipelineResult(table, RunReport(phases, None), None)


@dataclass(frozen=True)
class RunComparison:
    """Aligned moving-average series plus a final-value summary."""

    labels: tuple[str, ...]
    rows: tuple[tuple, ...]  # (step, ma_for_each_label...)
    finals: dict[str, float]

    def csv_rows(self):
        yield ("step",) + self.labels
        yield from self.rows


def compare_runs(reports: dict[str, RunReport]) -> RunComparison:
    """Align the sampled moving-average series of two or more runs.

    Runs sampled at different intervals are resampled to the coarsest
    interval (with a warning); steps absent from any run are dropped.
    """
    if len(reports) < 2:
        raise ValueError("compare_runs needs at least two run reports")
    labels = tuple(reports)
    series: dict[str, dict[int, float]] = {}
    intervals = set()
    for label, report in reports.items():
        samples: dict[int, float] = {}
        for phase in report.phases:
            intervals.add(phase.stats.interval)
            for sample in phase.stats.samples:
                samples[sample.step] = sample.moving_avg
        series[label] = samples
    coarsest = max(intervals)
    if len(intervals) > 1:
        warnings.warn(
            f"mismatched stats intervals {sorted(intervals)}; resampling to {coarsest}"
        )
        series = {
            label: {step: ma for step, ma in samples.items() if step % coarsest == 0}
            for label, samples in series.items()
        }
    common = sorted(set.intersection(*(set(s) for s in series.values())))
    rows = tuple((step,) + tuple(series[label][step] for label in labels) for step in common)
    finals = {
        label: report.phases[-1].final_moving_avg for label, report in reports.items()
    }
    return RunComparison(labels, rows, finals)
