"""Frozen Q-table serving: best action, ranked recommendations, greedy rollout.

Ties are broken lexicographically by activity label so identical snapshots
always answer identically.  Unseen states are handled by a configurable
fallback: fail, back off to the largest seen subset of the remaining work, or
rank by how often each action appears in the table.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import ConfigError, UnseenStateError
from .mdp import StateKey, StateMode
from .qlearn import QTable


class FallbackRule(Enum):
    ERROR = "error"
    SUBSET = "subset"
    FREQUENCY = "frequency"


def default_fallback(mode: StateMode) -> FallbackRule:
    return FallbackRule.SUBSET if mode is StateMode.REMAINING else FallbackRule.FREQUENCY


@dataclass(frozen=True)
class Recommendation:
    action: str
    q: float
    rank: int


@dataclass(frozen=True)
class RecommendResult:
    recommendations: tuple[Recommendation, ...]
    fallback_used: bool


@dataclass(frozen=True)
class RolloutResult:
    sequence: tuple[str, ...]
    partial: bool  # true when any step needed a fallback


def _ranked(scored: Iterable[tuple[str, float]], k: int) -> tuple[Recommendation, ...]:
    ordered = sorted(scored, key=lambda item: (-item[1], item[0]))
    return tuple(
        Recommendation(action=a, q=q, rank=i + 1) for i, (a, q) in enumerate(ordered[:k])
    )


class Policy:
    """Read-only view over a trained QTable."""

    def __init__(self, table: QTable, fallback: Optional[FallbackRule] = None):
        self._table = table.copy()  # freeze against later mutation of the source
        self.mode = table.mode
        self.fallback = fallback if fallback is not None else default_fallback(table.mode)
        if self.fallback is FallbackRule.SUBSET and self.mode is not StateMode.REMAINING:
            raise ConfigError("subset fallback only applies to remaining-set policies")
        self._freq = Counter(action for _, action, _ in self._table.items())
        self._subset_index = [
            (frozenset(state.activities), state)
            for state in self._table.states()
            if state.activities
        ] if self.mode is StateMode.REMAINING else []

    @classmethod
    def load(cls, path: str | Path, fallback: Optional[FallbackRule] = None) -> "Policy":
        return cls(QTable.load(path), fallback)

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._table.vocabulary

    @property
    def steps(self) -> int:
        return self._table.steps

    def snapshot_hash(self) -> str:
        return hashlib.sha256(self._table.to_json().encode("utf-8")).hexdigest()

    # -- ranking --------------------------------------------------------

    def _direct_candidates(self, state: StateKey) -> list[tuple[str, float]]:
        entries = self._table.actions(state)
        if self.mode is StateMode.REMAINING:
            allowed = set(state.activities)
            entries = {a: q for a, q in entries.items() if a in allowed}
        return list(entries.items())

    def _subset_candidates(self, state: StateKey) -> list[tuple[str, float]]:
        query = frozenset(state.activities)
        matches = [
            (-len(payload), seen.to_string(), seen)
            for payload, seen in self._subset_index
            if payload < query
        ]
        for _, _, seen in sorted(matches, key=lambda m: (m[0], m[1])):
            entries = self._direct_candidates(seen)
            if entries:
                return entries
        return []

    def _frequency_candidates(self, state: StateKey) -> list[tuple[str, float]]:
        if self.mode is StateMode.REMAINING:
            pool = state.activities
        else:
            pool = self.vocabulary
        return [(a, float(self._freq.get(a, 0))) for a in pool]

    def recommend(self, state: StateKey, k: int) -> RecommendResult:
        """Top-k actions for a state; falls back per configuration when unseen."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if state.mode is not self.mode:
            raise ConfigError(
                f"state mode {state.mode.value!r} does not match policy mode {self.mode.value!r}"
            )
        direct = self._direct_candidates(state)
        if direct:
            return RecommendResult(_ranked(direct, k), fallback_used=False)
        if self.fallback is FallbackRule.ERROR:
            raise UnseenStateError(state)
        if self.fallback is FallbackRule.SUBSET:
            candidates = self._subset_candidates(state)
            if candidates:
                return RecommendResult(_ranked(candidates, k), fallback_used=True)
        candidates = self._frequency_candidates(state)
        if not candidates:
            raise UnseenStateError(state)
        return RecommendResult(_ranked(candidates, k), fallback_used=True)


def best_action(policy: Policy, state: StateKey) -> Recommendation:
    """Argmax-Q action for the state (rank 1), ties broken by label."""
    return policy.recommend(state, 1).recommendations[0]


def rank_actions(policy: Policy, state: StateKey, k: int) -> list[Recommendation]:
    return list(policy.recommend(state, k).recommendations)


def rollout(policy: Policy, start: Iterable[str]) -> RolloutResult:
    """Greedily order the given activity multiset under the policy.

    Remaining-set policies step through shrinking sets; prefix policies grow
    the executed prefix, restricted to the supplied pool.  When a state is
    unseen and no fallback yields an in-pool action, the leftover activities
    are appended in label order and the result is flagged partial.
    """
    pool = Counter(start)
    executed: list[str] = []
    partial = False
    while sum(pool.values()) > 0:
        if policy.mode is StateMode.REMAINING:
            state = StateKey.remaining(pool.keys())
        else:
            state = StateKey.prefix(executed)
        choice: Optional[str] = None
        try:
            result = policy.recommend(state, k=len(policy.vocabulary) + len(pool))
            for rec in result.recommendations:
                if pool.get(rec.action, 0) > 0:
                    choice = rec.action
                    partial = partial or result.fallback_used
                    break
        except UnseenStateError:
            choice = None
        if choice is None:
            executed.extend(sorted(pool.elements()))
            return RolloutResult(tuple(executed), partial=True)
        executed.append(choice)
        pool[choice] -= 1
    return RolloutResult(tuple(executed), partial=partial)
