"""Event-log augmentation: timestamp jitter, completed-trace dropping, and
protected-aware activity removal, composed into a synthetic transition stream
for fine-tuning.

Jitter moves each event by up to `frac` of its incoming gap, which can swap
adjacent events — deliberately: reorderings expose state/action pairs the
original log never visited.  All transforms are seeded and reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from datetime import timedelta
from typing import Iterator, Literal, Optional

from .errors import ConfigError
from .eventlog import Event, EventLog, Outcome, Status, Trace
from .mdp import RewardConfig, StateMode, Transition, Vocabulary, _trace_episode


@dataclass(frozen=True)
class AugmentConfig:
    timestamp_noise_frac: float = 0.10
    drop_complete_frac: float = 0.05
    removal_frac: float = 0.20
    protected_activities: frozenset[str] = frozenset()
    min_trace_len_for_removal: int = 3
    target_transitions: int = 100_000
    seed: int = 0

    def __post_init__(self):
        for name in ("timestamp_noise_frac", "drop_complete_frac", "removal_frac"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.target_transitions < 1:
            raise ConfigError("target_transitions must be >= 1")
        object.__setattr__(self, "protected_activities", frozenset(self.protected_activities))


@dataclass(frozen=True)
class TraceProvenance:
    source_case_id: str
    transforms: tuple[str, ...]
    dropped: bool = False


@dataclass(frozen=True)
class AugmentedLog:
    traces: tuple[Trace, ...]
    provenance: tuple[TraceProvenance, ...]

    def __post_init__(self):
        present = sum(1 for p in self.provenance if not p.dropped)
        if present != len(self.traces):
            raise ValueError("provenance does not match the surviving traces")


def jitter_timestamps(trace: Trace, frac: float, rng: random.Random) -> Trace:
    """Shift each event by up to `frac` of its gap to the previous event.

    The first timestamp stays fixed.  Shifts are truncated to whole
    milliseconds toward zero so the bound |shift| <= frac * gap is exact at
    stored precision.  Events are re-sorted afterwards (shifts may swap
    neighbors).
    """
    if frac == 0.0 or len(trace.events) < 2:
        return trace
    events = [trace.events[0]]
    prev_ts = trace.events[0].timestamp
    for event in trace.events[1:]:
        gap = (event.timestamp - prev_ts).total_seconds()
        prev_ts = event.timestamp
        delta = rng.uniform(-frac * gap, frac * gap)
        delta_ms = int(delta * 1000.0)  # trunc toward zero keeps the bound strict
        events.append(replace(event, timestamp=event.timestamp + timedelta(milliseconds=delta_ms)))
    return replace(trace, events=tuple(events))  # Trace re-sorts on construction


def _is_complete(trace: Trace, criterion: str) -> bool:
    if criterion == "status":
        return all(e.status is Status.APPROVED for e in trace.events)
    return trace.outcome is not None and trace.outcome.categorical is Outcome.DESIRED


def _drop_indices(
    log: EventLog, frac: float, rng: random.Random, completed: str
) -> set[int]:
    criterion = completed
    if criterion == "auto":
        criterion = "status" if log.has_statuses() else "outcome"
    eligible = [i for i, t in enumerate(log.traces) if _is_complete(t, criterion)]
    n_drop = int(round(frac * len(eligible)))
    return set(rng.sample(eligible, n_drop)) if n_drop else set()


def drop_completed(
    log: EventLog,
    frac: float,
    rng: random.Random,
    completed: Literal["auto", "status", "outcome"] = "auto",
) -> EventLog:
    """Remove round(frac * n) of the fully-completed traces, chosen uniformly.

    "Completed" means every event approved when the log carries statuses,
    otherwise a desired trace outcome.
    """
    dropped = _drop_indices(log, frac, rng, completed)
    if not dropped:
        return log
    return EventLog(tuple(t for i, t in enumerate(log.traces) if i not in dropped))


def remove_activities(trace: Trace, cfg: AugmentConfig, rng: random.Random) -> Trace:
    """Independently drop non-protected events with probability removal_frac.

    Short traces (below min_trace_len_for_removal) pass through untouched,
    protected activities are never removed, and the result never shrinks
    below two events.
    """
    if len(trace.events) < cfg.min_trace_len_for_removal:
        return trace
    marked = [
        event.activity not in cfg.protected_activities and rng.random() < cfg.removal_frac
        for event in trace.events
    ]
    kept = []
    survivors = len(trace.events)
    for event, removable in zip(trace.events, marked):
        if removable and survivors > 2:
            survivors -= 1
            continue
        kept.append(event)
    if len(kept) == len(trace.events):
        return trace
    return replace(trace, events=tuple(kept))


def _transform_trace(
    trace: Trace, cfg: AugmentConfig, rng: random.Random
) -> tuple[Trace, tuple[str, ...]]:
    transforms = []
    reduced = remove_activities(trace, cfg, rng)
    if len(reduced) != len(trace):
        removed = len(trace) - len(reduced)
        transforms.append(f"removed:{removed}")
    jittered = jitter_timestamps(reduced, cfg.timestamp_noise_frac, rng)
    if jittered is not reduced:
        transforms.append("jitter")
    return jittered, tuple(transforms)


def augment_log(log: EventLog, cfg: AugmentConfig, rng: Optional[random.Random] = None) -> AugmentedLog:
    """One augmented copy of the log, with per-trace provenance."""
    rng = rng or random.Random(cfg.seed)
    dropped = _drop_indices(log, cfg.drop_complete_frac, rng, "auto")
    traces: list[Trace] = []
    provenance: list[TraceProvenance] = []
    for i, trace in enumerate(log.traces):
        if i in dropped:
            provenance.append(TraceProvenance(trace.case_id, ("dropped",), dropped=True))
            continue
        transformed, transforms = _transform_trace(trace, cfg, rng)
        traces.append(transformed)
        provenance.append(TraceProvenance(trace.case_id, transforms))
    return AugmentedLog(tuple(traces), tuple(provenance))


def dump_augmented(
    log: EventLog, cfg: AugmentConfig, csv_path, provenance_path
) -> AugmentedLog:
    """Write one augmented copy of the log as canonical CSV plus a JSON
    provenance sidecar mapping each source case to its applied transforms."""
    import json
    from pathlib import Path

    from .eventlog import serialize_csv

    augmented = augment_log(log, cfg)
    Path(csv_path).write_text(serialize_csv(EventLog(augmented.traces)), encoding="utf-8")
    sidecar = [
        {
            "source_case_id": p.source_case_id,
            "transforms": list(p.transforms),
            "dropped": p.dropped,
        }
        for p in augmented.provenance
    ]
    Path(provenance_path).write_text(
        json.dumps({"seed": cfg.seed, "traces": sidecar}, indent=2) + "\n",
        encoding="utf-8",
    )
    return augmented


def synthesize_stream(
    log: EventLog,
    cfg: AugmentConfig,
    mode: StateMode,
    reward_cfg: RewardConfig,
    vocabulary: Optional[Vocabulary] = None,
) -> Iterator[Transition]:
    """Exactly `cfg.target_transitions` transitions from resampled, transformed traces.

    Traces are drawn with replacement from the post-drop pool; each draw is
    independently reduced and jittered before being replayed as an episode.
    Fully deterministic for a fixed seed.
    """
    if len(log) == 0:
        raise ValueError("cannot synthesize from an empty log")
    rng = random.Random(cfg.seed)
    vocab = vocabulary or Vocabulary.from_log(log)
    pool = drop_completed(log, cfg.drop_complete_frac, rng).traces
    if not pool:
        raise ValueError("augmentation pool is empty after dropping completed traces")
    produced = 0
    serial = 0
    while produced < cfg.target_transitions:
        source = pool[rng.randrange(len(pool))]
        transformed, _ = _transform_trace(source, cfg, rng)
        serial += 1
        episode = replace(transformed, case_id=f"{source.case_id}#aug{serial}")
        for transition in _trace_episode(episode, mode, reward_cfg, vocab):
            yield transition
            produced += 1
            if produced >= cfg.target_transitions:
                return
