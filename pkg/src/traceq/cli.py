"""Command-line entry point.

Commands: train, finetune, evaluate, recommend, serve.  All outputs land
under the configured out-dir with fixed names (qtable.json, stats.csv,
run_report.json, kpi_report.json, distance_report.json); reruns with the
same config and seeds write byte-identical files.  Wall-clock timings go to
timing.json, the one deliberately non-deterministic output.

Exit codes: 0 success, 1 runtime failure, 2 configuration or I/O problem,
3 unseen state without a fallback.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import json
import os
import sys
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .config import EngineConfig, load_config
from .errors import ConfigError, SnapshotError, TraceqError, UnseenStateError
from .evaluate import (
    CsvRecommender,
    PolicyRecommender,
    ReplayPair,
    distance_eval,
    kpi_aggregate,
    median_activity_duration,
    replay_trace,
)
from .eventlog import (
    EmptyLogError,
    EventLog,
    label_outcomes,
    label_outcomes_from_status,
    parse_csv,
    split_train_test,
)
from .finetune import PipelineConfig, RunReport, run_isolated, run_pipeline
from .mdp import RewardMode, StateKey, StateMode, Vocabulary, episodes_from_log
from .policy import FallbackRule, Policy, rank_actions
from .qlearn import QTable, TrainStats, train_offline

EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_UNSEEN = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UnseenStateError as exc:
            _fail(EXIT_UNSEEN, str(exc))
        except (ConfigError, SnapshotError, EmptyLogError) as exc:
            _fail(EXIT_CONFIG, str(exc))
        except OSError as exc:
            _fail(EXIT_CONFIG, str(exc))
        except TraceqError as exc:
            _fail(EXIT_RUNTIME, str(exc))
        except (ValueError, KeyError) as exc:
            _fail(EXIT_RUNTIME, str(exc))

    return wrapper


def _apply_overrides(
    cfg: EngineConfig, seed: Optional[int], mode: Optional[str], out_dir: Optional[str]
) -> EngineConfig:
    pipeline = cfg.pipeline
    if seed is not None:
        pipeline = dataclasses.replace(
            pipeline,
            hyperparams=dataclasses.replace(pipeline.hyperparams, seed=seed),
            augment=dataclasses.replace(pipeline.augment, seed=seed),
        )
        cfg = dataclasses.replace(
            cfg, split=dataclasses.replace(cfg.split, seed=seed)
        )
    if mode is not None:
        pipeline = dataclasses.replace(pipeline, state_mode=StateMode(mode))
    cfg = dataclasses.replace(cfg, pipeline=pipeline)
    if out_dir is not None:
        cfg = dataclasses.replace(cfg, out_dir=Path(out_dir))
    return cfg


def _load_training_log(cfg: EngineConfig) -> EventLog:
    log = parse_csv(cfg.log_path.read_bytes(), cfg.schema)
    if cfg.schema.outcome_rule is not None:
        log = label_outcomes(log, cfg.schema)
    elif cfg.pipeline.reward.mode is RewardMode.TRACE_OUTCOME:
        raise ConfigError("trace_outcome reward mode requires a log.outcome rule")
    return log


def _write_stats_csv(path: Path, phases: list[tuple[str, TrainStats]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "mean_q", "moving_avg", "std", "phase"))
        for name, stats in phases:
            for row in stats.csv_rows():
                writer.writerow(row + (name,))


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        csv.writer(fh).writerows(rows)


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(), help="Engine config YAML."
)
seed_option = click.option("--seed", type=int, default=None,
                           help="Override the split, training and augmentation seeds.")
mode_option = click.option("--mode", type=click.Choice(["remaining", "prefix"]), default=None,
                           help="Override the state encoding.")
out_dir_option = click.option("--out-dir", type=click.Path(), default=None,
                              help="Override the output directory.")


@click.group()
@click.version_option(__version__, prog_name="traceq")
def main():
    """Next-best-activity engine: train, fine-tune, evaluate, recommend, serve."""


@main.command()
@config_option
@seed_option
@mode_option
@out_dir_option
@handle_errors
def train(config_path, seed, mode, out_dir):
    """Offline Q-learning on the training split; writes qtable.json + stats.csv."""
    cfg = _apply_overrides(load_config(config_path), seed, mode, out_dir)
    cfg.validate_paths()
    log = _load_training_log(cfg)
    train_log, _ = split_train_test(log, cfg.split.train_fraction, cfg.split.seed)
    p = cfg.pipeline
    vocab = Vocabulary.from_log(train_log)
    table = QTable(p.state_mode, vocab.labels, p.hyperparams)

    def episodes():
        for _ in range(p.offline_passes):
            yield from episodes_from_log(train_log, p.state_mode, p.reward, vocab)

    table, stats = train_offline(
        episodes(), p.hyperparams, table,
        stats_interval=p.stats_interval, ma_window=p.ma_window,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    table.save(cfg.out_dir / "qtable.json")
    _write_stats_csv(cfg.out_dir / "stats.csv", [("offline", stats)])
    click.echo(f"trained {table.steps} steps, {table.entry_count()} entries "
               f"-> {cfg.out_dir / 'qtable.json'}")


@main.command()
@config_option
@seed_option
@mode_option
@out_dir_option
@click.option("--isolated", is_flag=True,
              help="Skip pre-training; learn from the augmented stream only.")
@click.option("--dump-augmented", is_flag=True,
              help="Also write one augmented log copy (CSV + provenance sidecar).")
@handle_errors
def finetune(config_path, seed, mode, out_dir, isolated, dump_augmented):
    """Offline pre-training plus augmented fine-tuning (the full pipeline)."""
    cfg = _apply_overrides(load_config(config_path), seed, mode, out_dir)
    cfg.validate_paths()
    log = _load_training_log(cfg)
    train_log, _ = split_train_test(log, cfg.split.train_fraction, cfg.split.seed)
    result = (run_isolated if isolated else run_pipeline)(train_log, cfg.pipeline)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if dump_augmented:
        from .augment import dump_augmented as _dump

        _dump(
            train_log, cfg.pipeline.augment,
            cfg.out_dir / "augmented_log.csv",
            cfg.out_dir / "augmented_provenance.json",
        )
    result.table.save(cfg.out_dir / "qtable.json")
    _write_stats_csv(
        cfg.out_dir / "stats.csv",
        [(phase.name, phase.stats) for phase in result.report.phases],
    )
    _write_json(cfg.out_dir / "run_report.json", result.report.to_dict())
    _write_json(cfg.out_dir / "timing.json", result.report.timing_dict())
    summary = ", ".join(
        f"{p.name}: {p.steps} steps, final MA {p.final_moving_avg:.4f}"
        for p in result.report.phases
    )
    click.echo(summary)


@main.command()
@config_option
@seed_option
@mode_option
@out_dir_option
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path(),
              help="Trained qtable.json to evaluate.")
@click.option("--recommender-csv", type=click.Path(), default=None,
              help="External recommendations: case_id, position, activity rows.")
@handle_errors
def evaluate(config_path, seed, mode, out_dir, snapshot_path, recommender_csv):
    """Replay KPIs plus recommended-path distances on the test split."""
    cfg = _apply_overrides(load_config(config_path), seed, mode, out_dir)
    cfg.validate_paths()
    if recommender_csv is not None and not Path(recommender_csv).is_file():
        raise ConfigError(f"recommender CSV not found: {recommender_csv}")
    log = parse_csv(cfg.log_path.read_bytes(), cfg.schema)
    if cfg.schema.outcome_rule is not None:
        log = label_outcomes(log, cfg.schema)
    elif log.has_statuses():
        log = label_outcomes_from_status(log)
    else:
        raise ConfigError(
            "evaluation needs trace outcomes: configure log.outcome or supply a status column"
        )
    _, test_log = split_train_test(log, cfg.split.train_fraction, cfg.split.seed)
    if len(test_log) == 0:
        raise EmptyLogError("no test traces: the split left nothing to evaluate")
    policy = Policy.load(snapshot_path)
    last_duration = median_activity_duration(log)
    pairs = [
        ReplayPair(trace.case_id, *replay_trace(trace, policy, last_duration))
        for trace in test_log.traces
    ]
    kpi = kpi_aggregate(pairs)
    recommenders = {"policy": PolicyRecommender(policy)}
    if recommender_csv is not None:
        recommenders["external"] = CsvRecommender(Path(recommender_csv).read_text())
    distances = distance_eval(test_log, recommenders)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out_dir / "kpi_report.json", kpi.to_dict())
    _write_csv(cfg.out_dir / "kpi_report.csv", kpi.csv_rows())
    _write_json(cfg.out_dir / "distance_report.json", distances.to_dict())
    _write_csv(cfg.out_dir / "distance_report.csv", distances.csv_rows())
    click.echo(
        f"evaluated {len(pairs)} test traces: "
        f"saved resource {kpi.total_saved_resource_s:.0f}s, "
        f"saved span {kpi.total_saved_span_s:.0f}s"
    )


def _parse_activities(text: str) -> list[str]:
    items = [part.strip() for part in text.split(",")]
    if any(not part for part in items):
        raise click.UsageError(f"malformed activity list: {text!r}")
    return items


@main.command()
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path())
@click.option("--remaining", default=None,
              help="Comma-separated activities still to execute (remaining-set policies).")
@click.option("--prefix", default=None,
              help="Comma-separated executed prefix (prefix policies).")
@click.option("--k", default=3, show_default=True, help="Number of recommendations.")
@click.option("--fallback", type=click.Choice([f.value for f in FallbackRule]),
              default=None, help="Unseen-state handling (default depends on mode).")
@handle_errors
def recommend(snapshot_path, remaining, prefix, k, fallback):
    """Rank next activities for a state; prints JSON to stdout."""
    if (remaining is None) == (prefix is None):
        raise click.UsageError("supply exactly one of --remaining or --prefix")
    rule = FallbackRule(fallback) if fallback else None
    policy = Policy.load(snapshot_path, rule)
    if remaining is not None:
        if policy.mode is not StateMode.REMAINING:
            raise ConfigError("--remaining given but the snapshot uses prefix states")
        state = StateKey.remaining(_parse_activities(remaining))
    else:
        if policy.mode is not StateMode.PREFIX:
            raise ConfigError("--prefix given but the snapshot uses remaining-set states")
        state = StateKey.prefix(_parse_activities(prefix))
    result = policy.recommend(state, k)
    click.echo(json.dumps(
        {
            "recommendations": [
                {"activity": r.action, "q": r.q, "rank": r.rank}
                for r in result.recommendations
            ],
            "fallback_used": result.fallback_used,
            "policy_version": policy.snapshot_hash(),
        },
        indent=2,
    ))


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Engine config YAML (for bind address and CORS).")
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path())
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@handle_errors
def serve(config_path, snapshot_path, host, port):
    """Serve recommendations over HTTP for the analyst UI and other clients."""
    import uvicorn

    from .service import create_app

    service_cfg = load_config(config_path).service if config_path else None
    bind_host = host or (service_cfg.host if service_cfg else "127.0.0.1")
    bind_port = port or (service_cfg.port if service_cfg else 8000)
    origins = list(service_cfg.cors_origins) if service_cfg else ["*"]
    policy = Policy.load(snapshot_path)
    app = create_app(policy, cors_origins=origins)
    log_level = os.environ.get("TRACEQ_LOG_LEVEL", "info").lower()
    uvicorn.run(app, host=bind_host, port=bind_port, log_level=log_level)


if __name__ == "__main__":
    main()
