"""Exception types shared across the engine.

The CLI maps these onto exit codes: configuration / input problems exit 2,
unseen policy states exit 3, anything else exits 1.
"""


class TraceqError(Exception):
    """Base class for all engine errors."""


class ConfigError(TraceqError):
    """Invalid configuration: bad values, mismatched modes, unknown references."""


class SchemaError(ConfigError):
    """The input log does not match the declared schema (e.g. missing column)."""


class RowError(TraceqError):
    """A single input row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyLogError(TraceqError):
    """The input contained no events."""


class SnapshotError(TraceqError):
    """A persisted Q-table snapshot is unreadable or has the wrong format version."""


class UnseenStateError(TraceqError):
    """The policy was asked about a state it has never observed and no fallback applies."""

    def __init__(self, state):
        super().__init__(f"state not present in the policy table: {state}")
        self.state = state
