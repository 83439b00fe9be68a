"""Declarative trace-outcome rules.

Each dataset defines "undesired" differently (a marker activity occurring
within a deadline, a rejected attribute, an overlong case, ...), so the rule
is configuration rather than code.  A rule evaluates a trace and, when it
fires, reports where the failure manifested so the wasted-work measure can be
derived:

* ``trigger_index`` set   -> wasted count = events strictly after the trigger
* ``wasted_seconds`` set  -> wasted time  = the reported excess duration
* neither                 -> the whole trace is counted as wasted

Dict form (used in config files)::

    {"contains": {"activity": "A_Rejected"}}
    {"contains_within": {"activity": "Return ER", "anchor": "Release A", "days": 28}}
    {"attr_equals": {"key": "channel", "value": "web"}}
    {"duration_exceeds": {"days": 71.52}}
    {"any": [rule, ...]}   {"all": [rule, ...]}   {"not": rule}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .errors import ConfigError

if TYPE_CHECKING:
    from .eventlog import Trace


@dataclass(frozen=True)
class FireReport:
    """Outcome of evaluating a rule against one trace."""

    fired: bool
    trigger_index: Optional[int] = None
    wasted_seconds: Optional[float] = None


class Rule:
    """Base class; subclasses implement :meth:`evaluate`."""

    def evaluate(self, trace: "Trace") -> FireReport:
        raise NotImplementedError

    def referenced_activities(self) -> set[str]:
        return set()


@dataclass(frozen=True)
class Contains(Rule):
    activity: str

    def evaluate(self, trace):
        for i, ev in enumerate(trace.events):
            if ev.activity == self.activity:
                return FireReport(True, trigger_index=i)
        return FireReport(False)

    def referenced_activities(self):
        return {self.activity}


@dataclass(frozen=True)
class ContainsWithin(Rule):
    """Fires when `activity` occurs within `days` after an `anchor` occurrence."""

    activity: str
    anchor: str
    days: float

    def evaluate(self, trace):
        window = self.days * 86400.0
        anchor_times = [ev.timestamp for ev in trace.events if ev.activity == self.anchor]
        for i, ev in enumerate(trace.events):
            if ev.activity != self.activity:
                continue
            for t0 in anchor_times:
                delta = (ev.timestamp - t0).total_seconds()
                if 0.0 <= delta <= window:
                    return FireReport(True, trigger_index=i)
        return FireReport(False)

    def referenced_activities(self):
        return {self.activity, self.anchor}


@dataclass(frozen=True)
class AttrEquals(Rule):
    key: str
    value: str

    def evaluate(self, trace):
        for i, ev in enumerate(trace.events):
            if ev.extra.get(self.key) == self.value:
                return FireReport(True, trigger_index=i)
        return FireReport(False)


@dataclass(frozen=True)
class DurationExceeds(Rule):
    days: float

    def evaluate(self, trace):
        limit = self.days * 86400.0
        span = (trace.events[-1].timestamp - trace.events[0].timestamp).total_seconds()
        if span > limit:
            return FireReport(True, wasted_seconds=span - limit)
        return FireReport(False)


@dataclass(frozen=True)
class Not(Rule):
    inner: Rule

    def evaluate(self, trace):
        # Negation has no single failing event; the whole trace counts as wasted.
        return FireReport(not self.inner.evaluate(trace).fired)

    def referenced_activities(self):
        return self.inner.referenced_activities()


@dataclass(frozen=True)
class AnyOf(Rule):
    rules: tuple[Rule, ...]

    def evaluate(self, trace):
        fired = [r.evaluate(trace) for r in self.rules]
        fired = [f for f in fired if f.fired]
        if not fired:
            return FireReport(False)
        triggers = [f.trigger_index for f in fired if f.trigger_index is not None]
        if triggers:
            return FireReport(True, trigger_index=min(triggers))
        seconds = [f.wasted_seconds for f in fired if f.wasted_seconds is not None]
        return FireReport(True, wasted_seconds=max(seconds) if seconds else None)

    def referenced_activities(self):
        return set().union(*(r.referenced_activities() for r in self.rules))


@dataclass(frozen=True)
class AllOf(Rule):
    rules: tuple[Rule, ...]

    def evaluate(self, trace):
        reports = [r.evaluate(trace) for r in self.rules]
        if not all(f.fired for f in reports):
            return FireReport(False)
        triggers = [f.trigger_index for f in reports if f.trigger_index is not None]
        if len(triggers) == len(reports):
            # Failure is established once the last condition is met.
            return FireReport(True, trigger_index=max(triggers))
        seconds = [f.wasted_seconds for f in reports if f.wasted_seconds is not None]
        return FireReport(True, wasted_seconds=max(seconds) if seconds else None)

    def referenced_activities(self):
        return set().union(*(r.referenced_activities() for r in self.rules))


def parse_rule(spec) -> Rule:
    """Build a Rule from its config-dict form."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"a rule must be a single-key mapping, got: {spec!r}")
    kind, body = next(iter(spec.items()))
    try:
        if kind == "contains":
            return Contains(activity=str(body["activity"]))
        if kind == "contains_within":
            return ContainsWithin(
                activity=str(body["activity"]),
                anchor=str(body["anchor"]),
                days=float(body["days"]),
            )
        if kind == "attr_equals":
            return AttrEquals(key=str(body["key"]), value=str(body["value"]))
        if kind == "duration_exceeds":
            return DurationExceeds(days=float(body["days"]))
        if kind == "not":
            return Not(parse_rule(body))
        if kind == "any":
            return AnyOf(tuple(parse_rule(r) for r in body))
        if kind == "all":
            return AllOf(tuple(parse_rule(r) for r in body))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad '{kind}' rule: {exc}") from exc
    raise ConfigError(f"unknown rule kind: {kind!r}")
