"""Unified engine configuration: one YAML file drives every command.

Example::

    log:
      path: data/log.csv
      case_column: case
      activity_column: activity
      timestamp_column: time
      status_column: status        # optional
      outcome:                     # optional declarative rule
        contains_within: {activity: "Return ER", anchor: "Release A", days: 28}
    mdp:
      state_mode: remaining        # remaining | prefix
      reward:
        base: 1.0
        mode: per_task_status      # per_task_status | trace_outcome
        position_penalty: true
    train:
      alpha: 0.1
      gamma: 0.9
      seed: 7
      offline_passes: 1
      stats_interval: 100
      ma_window: 500
    augment:
      timestamp_noise_frac: 0.10
      drop_complete_frac: 0.05
      removal_frac: 0.20
      protected_activities: []
      target_transitions: 100000
      seed: 13
    split:
      train_fraction: 0.8
      seed: 99
    service:
      host: 127.0.0.1
      port: 8000
      cors_origins: ["*"]
    out_dir: out
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .augment import AugmentConfig
from .errors import ConfigError
from .eventlog import LogSchema
from .finetune import PipelineConfig
from .mdp import RewardConfig, RewardMode, StateMode
from .qlearn import Hyperparams


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"split train_fraction must lie in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    cors_origins: tuple[str, ...] = ("*",)


@dataclass(frozen=True)
class EngineConfig:
    log_path: Path
    schema: LogSchema
    pipeline: PipelineConfig
    split: SplitConfig
    service: ServiceConfig
    out_dir: Path
    base_dir: Path = field(default=Path("."))

    def validate_paths(self, need_log: bool = True) -> None:
        """Fail fast, before any phase starts or any output file is touched."""
        if need_log and not self.log_path.is_file():
            raise ConfigError(f"log file not found: {self.log_path}")


def _enum(value, enum_cls, what: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{what} must be one of: {choices} (got {value!r})") from None


def load_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> EngineConfig:
    log_cfg = raw.get("log") or {}
    if "path" not in log_cfg:
        raise ConfigError("config is missing log.path")
    schema = LogSchema.from_dict(log_cfg)

    mdp_cfg = raw.get("mdp") or {}
    reward_cfg = mdp_cfg.get("reward") or {}
    reward = RewardConfig(
        base_reward=float(reward_cfg.get("base", 1.0)),
        mode=_enum(reward_cfg.get("mode", "per_task_status"), RewardMode, "reward mode"),
        position_penalty=bool(reward_cfg.get("position_penalty", True)),
        importance=dict(reward_cfg.get("importance") or {}),
    )
    state_mode = _enum(mdp_cfg.get("state_mode", "remaining"), StateMode, "state_mode")

    train_cfg = raw.get("train") or {}
    hyperparams = Hyperparams(
        alpha=float(train_cfg.get("alpha", 0.1)),
        gamma=float(train_cfg.get("gamma", 0.9)),
        seed=int(train_cfg.get("seed", 0)),
    )

    augment_cfg = raw.get("augment") or {}
    augment = AugmentConfig(
        timestamp_noise_frac=float(augment_cfg.get("timestamp_noise_frac", 0.10)),
        drop_complete_frac=float(augment_cfg.get("drop_complete_frac", 0.05)),
        removal_frac=float(augment_cfg.get("removal_frac", 0.20)),
        protected_activities=frozenset(augment_cfg.get("protected_activities") or ()),
        min_trace_len_for_removal=int(augment_cfg.get("min_trace_len_for_removal", 3)),
        target_transitions=int(augment_cfg.get("target_transitions", 100_000)),
        seed=int(augment_cfg.get("seed", 0)),
    )

    pipeline = PipelineConfig(
        state_mode=state_mode,
        reward=reward,
        hyperparams=hyperparams,
        augment=augment,
        offline_passes=int(train_cfg.get("offline_passes", 1)),
        stats_interval=int(train_cfg.get("stats_interval", 100)),
        ma_window=int(train_cfg.get("ma_window", 500)),
        offline_only=bool(train_cfg.get("offline_only", False)),
    )

    split_cfg = raw.get("split") or {}
    split = SplitConfig(
        train_fraction=float(split_cfg.get("train_fraction", 0.8)),
        seed=int(split_cfg.get("seed", 0)),
    )

    service_cfg = raw.get("service") or {}
    service = ServiceConfig(
        host=str(service_cfg.get("host", "127.0.0.1")),
        port=int(service_cfg.get("port", 8000)),
        cors_origins=tuple(service_cfg.get("cors_origins") or ("*",)),
    )

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    return EngineConfig(
        log_path=resolve(log_cfg["path"]),
        schema=schema,
        pipeline=pipeline,
        split=split,
        service=service,
        out_dir=resolve(raw.get("out_dir", "out")),
        base_dir=base_dir,
    )
