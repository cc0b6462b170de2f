"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class StreamwatchError(Exception):
    """Base class for all errors raised by this package."""


class SpecParseError(StreamwatchError):
    """Lexical or syntactic error in a specification, with position info."""

    def __init__(self, message: str, line: int, column: int,
                 expected: tuple[str, ...] = ()) -> None:
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        where = f"{line}:{column}"
        if expected:
            message = f"{message} (expected {', '.join(expected)})"
        super().__init__(f"{where}: {message}")


class AnalysisFailure(StreamwatchError):
    """Raised when static analysis rejects a specification.

    Carries one :class:`~streamwatch.analysis.AnalysisError` per offending
    declaration, in declaration order.
    """

    def __init__(self, errors) -> None:
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class TimeRegression(StreamwatchError):
    """An event or clock advance moved backwards in time."""

    def __init__(self, message: str, last_ns: int, got_ns: int) -> None:
        self.last_ns = last_ns
        self.got_ns = got_ns
        super().__init__(message)


class MonitorInputError(StreamwatchError):
    """An event referenced an unknown stream or carried a mistyped value."""


class MappingError(StreamwatchError):
    """Event-factory construction failed: the source cannot feed this spec.

    ``unmatched`` lists every input stream without a usable source field.
    """

    def __init__(self, message: str, unmatched: tuple[str, ...] = ()) -> None:
        self.unmatched = unmatched
        super().__init__(message)


class TransportError(StreamwatchError):
    """A connector's transport failed (I/O error, unexpected disconnect).

    Distinct from a clean end-of-stream, which sources signal by ending
    iteration.
    """


class ConfigError(StreamwatchError):
    """Invalid run/source/sink/schema configuration (usage error)."""
