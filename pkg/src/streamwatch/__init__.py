"""streamwatch: stream-based runtime monitoring.

A real-time specification language, static analysis, a deterministic
evaluation engine, and event/verdict conversion layers that keep one
specification running unchanged against log files, replayed traces, and
live network feeds.
"""

from .adapter import (
    ConversionError,
    EventFactory,
    FieldMapping,
    MappingConfig,
    RawRecord,
    TimeMode,
    build_field_mapping,
    event_factory_new,
)
from .analysis import (
    AnalysisError,
    AnalysisErrorKind,
    Pacing,
    PacingKind,
    TypedSpecification,
    analyze,
    check_well_formedness,
    infer_pacing,
    memory_bounds,
)
from .engine import CycleKind, Event, Monitor, Verdict, new_monitor
from .errors import (
    AnalysisFailure,
    ConfigError,
    MappingError,
    MonitorInputError,
    SpecParseError,
    StreamwatchError,
    TimeRegression,
    TransportError,
)
from .parser import parse
from .pretty import pretty_print
from .values import Value, ValueType

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "AnalysisErrorKind",
    "AnalysisFailure",
    "ConfigError",
    "ConversionError",
    "CycleKind",
    "Event",
    "EventFactory",
    "FieldMapping",
    "MappingConfig",
    "MappingError",
    "Monitor",
    "MonitorInputError",
    "Pacing",
    "PacingKind",
    "RawRecord",
    "SpecParseError",
    "StreamwatchError",
    "TimeMode",
    "TimeRegression",
    "TransportError",
    "TypedSpecification",
    "Value",
    "ValueType",
    "Verdict",
    "analyze",
    "build_field_mapping",
    "check_well_formedness",
    "event_factory_new",
    "infer_pacing",
    "memory_bounds",
    "new_monitor",
    "parse",
    "pretty_print",
]
