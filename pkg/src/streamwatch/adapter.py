"""Event conversion: raw source records become typed monitor events.

The factory validates the source-to-specification mapping once, at
construction, and freezes it; per-record work is a table lookup plus a
type coercion.  A record that maps zero input streams is skipped and
counted, never an error (live feeds carry unrelated traffic).
"""

from __future__ import annotations

import enum
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .engine import Event
from .errors import MappingError
from .values import INT_RANGES, Value, ValueType, ns_from_seconds


class RawKind(enum.Enum):
    """What a source promises to deliver for a field."""

    INT = "int"
    FLOAT = "float"
    BOOL = "bool"
    TEXT = "text"  # CSV cells: anything parseable
    ANY = "any"


# construction-time compatibility: raw promise -> coercible stream types
_COMPATIBLE: dict[RawKind, frozenset[ValueType]] = {
    RawKind.INT: frozenset(
        {ValueType.INT64, ValueType.UINT64, ValueType.UINT8, ValueType.FLOAT64,
         ValueType.BOOL}
    ),
    RawKind.FLOAT: frozenset({ValueType.FLOAT64}),
    RawKind.BOOL: frozenset({ValueType.BOOL}),
    RawKind.TEXT: frozenset(ValueType),
    RawKind.ANY: frozenset(ValueType),
}


@dataclass
class RawRecord:
    """One record from an event source: optional decimal-second timestamp
    plus whatever fields were present."""

    fields: dict[str, object]
    time: float | None = None


class ConversionErrorKind(enum.Enum):
    MISSING_FIELD = "missing field"
    TYPE_COERCION = "type coercion"
    TIME_MISSING = "time missing"
    TIME_REGRESSION = "time regression"


class ConversionError(Exception):
    """A record could not become an event; names the field and stream."""

    def __init__(
        self, kind: ConversionErrorKind, field_name: str, detail: str
    ) -> None:
        self.kind = kind
        self.field = field_name
        self.detail = detail
        super().__init__(f"{kind.value}: {field_name}: {detail}")


class TimeMode(enum.Enum):
    DATA = "data"  # timestamps read from the records
    REALTIME = "realtime"  # wall clock at arrival; record time ignored


@dataclass
class MappingConfig:
    """Declarative source-to-stream mapping.

    * ``rename``: input stream -> source field (default: same name)
    * ``prefix_flatten``: nested record field -> flattening prefix
      (a nested field ``GPS`` with prefix ``GPS`` exposes ``GPS_lat`` ...)
    * ``scale``: input stream -> multiplier, Float64 streams only
    * ``time_field``: record field holding decimal seconds
    """

    rename: dict[str, str] = field(default_factory=dict)
    prefix_flatten: dict[str, str] = field(default_factory=dict)
    scale: dict[str, float] = field(default_factory=dict)
    time_field: str = "time"

    @staticmethod
    def from_dict(data: Mapping) -> "MappingConfig":
        known = {"rename", "prefix_flatten", "scale", "time_field"}
        unknown = set(data) - known
        if unknown:
            raise MappingError(
                f"unknown mapping config section(s): {', '.join(sorted(unknown))}"
            )
        return MappingConfig(
            rename=dict(data.get("rename", {})),
            prefix_flatten=dict(data.get("prefix_flatten", {})),
            scale={k: float(v) for k, v in data.get("scale", {}).items()},
            time_field=data.get("time_field", "time"),
        )

    @staticmethod
    def from_file(path) -> "MappingConfig":
        import json

        with open(path, "r", encoding="utf-8") as fh:
            return MappingConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class FieldMapEntry:
    stream: str
    source_field: str
    value_type: ValueType
    scale: float | None = None


@dataclass(frozen=True)
class FieldMapping:
    """The frozen result of mapping validation.

    Serializable: a factory rebuilt from ``to_dict``/``from_dict`` behaves
    identically, so nothing is re-derived per event.
    """

    entries: tuple[FieldMapEntry, ...]
    prefix_flatten: tuple[tuple[str, str], ...]
    time_field: str

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "stream": e.stream,
                    "field": e.source_field,
                    "type": e.value_type.value,
                    "scale": e.scale,
                }
                for e in self.entries
            ],
            "prefix_flatten": dict(self.prefix_flatten),
            "time_field": self.time_field,
        }

    @staticmethod
    def from_dict(data: Mapping) -> "FieldMapping":
        return FieldMapping(
            entries=tuple(
                FieldMapEntry(
                    stream=e["stream"],
                    source_field=e["field"],
                    value_type=ValueType(e["type"]),
                    scale=e.get("scale"),
                )
                for e in data["entries"]
            ),
            prefix_flatten=tuple(dict(data.get("prefix_flatten", {})).items()),
            time_field=data["time_field"],
        )


def build_field_mapping(
    schema: Mapping[str, ValueType],
    config: MappingConfig | None = None,
    declared: Mapping[str, RawKind] | None = None,
) -> FieldMapping:
    """Validate and freeze the stream-to-field mapping.

    ``declared``, when the source can promise its fields up front (CSV
    header, binary frame schema), must be a superset of what the mapping
    needs; otherwise construction fails listing every unmatched stream.
    """
    config = config or MappingConfig()

    for stream in config.rename:
        if stream not in schema:
            raise MappingError(
                f"rename entry for {stream!r}, which is not an input stream"
            )
    for stream, factor in config.scale.items():
        if stream not in schema:
            raise MappingError(
                f"scale entry for {stream!r}, which is not an input stream"
            )
        if schema[stream] is not ValueType.FLOAT64:
            raise MappingError(
                f"scale factor on {stream!r} requires a Float64 stream, "
                f"not {schema[stream]}"
            )

    entries: list[FieldMapEntry] = []
    by_field: dict[str, str] = {}
    unmatched: list[str] = []
    for stream, ty in schema.items():
        source_field = config.rename.get(stream, stream)
        if source_field in by_field:
            raise MappingError(
                f"streams {by_field[source_field]!r} and {stream!r} both map "
                f"to source field {source_field!r}"
            )
        by_field[source_field] = stream
        if declared is not None:
            if source_field not in declared:
                if not _flattenable(source_field, declared, config.prefix_flatten):
                    unmatched.append(stream)
                    continue
                raw_kind = RawKind.ANY
            else:
                raw_kind = declared[source_field]
            if ty not in _COMPATIBLE[raw_kind]:
                raise MappingError(
                    f"source field {source_field!r} delivers {raw_kind.value} "
                    f"values, incompatible with {stream}: {ty}"
                )
        entries.append(
            FieldMapEntry(
                stream=stream,
                source_field=source_field,
                value_type=ty,
                scale=config.scale.get(stream),
            )
        )
    if unmatched:
        raise MappingError(
            "source does not provide field(s) for input stream(s): "
            + ", ".join(sorted(unmatched)),
            unmatched=tuple(sorted(unmatched)),
        )
    return FieldMapping(
        entries=tuple(entries),
        prefix_flatten=tuple(config.prefix_flatten.items()),
        time_field=config.time_field,
    )


def _flattenable(
    field_name: str,
    declared: Mapping[str, RawKind],
    prefix_flatten: Mapping[str, str],
) -> bool:
    for source_field, prefix in prefix_flatten.items():
        if field_name.startswith(prefix + "_") and source_field in declared:
            return True
    return False


# ── per-type coercions (strict: no silent truncation) ────────────

_TRUE_WORDS = frozenset({"true", "1"})
_FALSE_WORDS = frozenset({"false", "0"})
_FLOAT_EXACT_INT = 2**53


def _coerce_int(raw: object, ty: ValueType) -> int:
    lo, hi = INT_RANGES[ty]
    if isinstance(raw, bool):
        raise ValueError("boolean where an integer is required")
    if isinstance(raw, str):
        text = raw.strip()
        try:
            value = int(text, 10)
        except ValueError:
            value = float(text)  # may raise ValueError: propagates
            if not value.is_integer():
                raise ValueError(f"{text!r} is not an integer")
            value = int(value)
    elif isinstance(raw, int):
        value = raw
    elif isinstance(raw, float):
        if not raw.is_integer():
            raise ValueError(f"{raw!r} is not an integer")
        value = int(raw)
    else:
        raise ValueError(f"cannot convert {type(raw).__name__}")
    if not lo <= value <= hi:
        raise ValueError(f"{value} out of range for {ty}")
    return value


def _coerce_float(raw: object) -> float:
    if isinstance(raw, bool):
        raise ValueError("boolean where a number is required")
    if isinstance(raw, float):
        return raw
    if isinstance(raw, int):
        if abs(raw) > _FLOAT_EXACT_INT:
            raise ValueError(f"{raw} is not exactly representable as Float64")
        return float(raw)
    if isinstance(raw, str):
        return float(raw.strip())  # ValueError propagates
    raise ValueError(f"cannot convert {type(raw).__name__}")


def _coerce_bool(raw: object) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, int):
        if raw in (0, 1):
            return bool(raw)
        raise ValueError(f"{raw} is not a boolean (expected 0 or 1)")
    if isinstance(raw, str):
        word = raw.strip().lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise ValueError(f"{raw!r} is not a boolean")
    raise ValueError(f"cannot convert {type(raw).__name__}")


def _coercer(ty: ValueType, scale: float | None) -> Callable[[object], Value]:
    if ty is ValueType.BOOL:
        return _coerce_bool
    if ty is ValueType.FLOAT64:
        if scale is not None:
            return lambda raw: _coerce_float(raw) * scale
        return _coerce_float
    return lambda raw: _coerce_int(raw, ty)


class MonotonicClock:
    """Seconds since first use; keeps realtime timestamps near zero."""

    def __init__(self) -> None:
        self._t0: float | None = None

    def __call__(self) -> float:
        now = _time.monotonic()
        if self._t0 is None:
            self._t0 = now
        return now - self._t0


class EventFactory:
    """Data conversion half of event conversion.

    Construct with :func:`event_factory_new`; then :meth:`create` turns each
    raw record into an :class:`Event`, raises :class:`ConversionError`, or
    returns None for a record carrying no mapped fields (counted in
    ``skipped``).
    """

    def __init__(
        self,
        mapping: FieldMapping,
        time_mode: TimeMode = TimeMode.DATA,
        clock: Callable[[], float] | None = None,
    ) -> None:
        self.mapping = mapping
        self.time_mode = time_mode
        self._clock = clock or MonotonicClock()
        self._prefixes = dict(mapping.prefix_flatten)
        self._table: dict[str, tuple[str, Callable[[object], Value]]] = {
            e.source_field: (e.stream, _coercer(e.value_type, e.scale))
            for e in mapping.entries
        }
        self.skipped = 0
        self._last_ns: int | None = None

    def create(self, record: RawRecord) -> Event | None:
        fields = record.fields
        if any(isinstance(v, dict) for v in fields.values()):
            fields = self._flatten(fields)

        time_ns = self._timestamp(record, fields)

        values: dict[str, Value] = {}
        table = self._table
        for name, raw in fields.items():
            entry = table.get(name)
            if entry is None or raw is None:
                continue
            stream, coerce = entry
            try:
                values[stream] = coerce(raw)
            except ValueError as e:
                raise ConversionError(
                    ConversionErrorKind.TYPE_COERCION,
                    name,
                    f"stream {stream!r}: {e}",
                )
        if not values:
            self.skipped += 1
            return None

        if self.time_mode is TimeMode.DATA:
            if self._last_ns is not None and time_ns < self._last_ns:
                raise ConversionError(
                    ConversionErrorKind.TIME_REGRESSION,
                    self.mapping.time_field,
                    f"record time went backwards "
                    f"({time_ns} < {self._last_ns} ns)",
                )
            self._last_ns = time_ns
        return Event(time_ns=time_ns, values=values)

    def _timestamp(self, record: RawRecord, fields: dict[str, object]) -> int:
        if self.time_mode is TimeMode.REALTIME:
            return ns_from_seconds(self._clock())
        seconds: object = record.time
        if seconds is None:
            seconds = fields.get(self.mapping.time_field)
        if seconds is None:
            raise ConversionError(
                ConversionErrorKind.TIME_MISSING,
                self.mapping.time_field,
                "data time mode requires a record timestamp",
            )
        try:
            return ns_from_seconds(_coerce_float(seconds))
        except ValueError as e:
            raise ConversionError(
                ConversionErrorKind.TYPE_COERCION, self.mapping.time_field, str(e)
            )

    def _flatten(self, fields: dict[str, object]) -> dict[str, object]:
        flat: dict[str, object] = {}
        for name, value in fields.items():
            if isinstance(value, dict):
                prefix = self._prefixes.get(name, name)
                for sub, sub_value in value.items():
                    key = f"{prefix}_{sub}"
                    if key in flat or key in fields:
                        raise ConversionError(
                            ConversionErrorKind.TYPE_COERCION,
                            key,
                            "name collision after prefix flattening",
                        )
                    flat[key] = sub_value
            else:
                flat[name] = value
        return flat


def event_factory_new(
    schema: Mapping[str, ValueType],
    config: MappingConfig | None = None,
    declared: Mapping[str, RawKind] | None = None,
    time_mode: TimeMode = TimeMode.DATA,
    clock: Callable[[], float] | None = None,
) -> EventFactory:
    """Validate the mapping against the source's declared fields and return
    a factory with the mapping frozen.

    Raises :class:`MappingError` when any input stream has no source field,
    two streams claim the same field, or a declared field type cannot
    coerce to the stream's type.
    """
    mapping = build_field_mapping(schema, config, declared)
    return EventFactory(mapping, time_mode=time_mode, clock=clock)
