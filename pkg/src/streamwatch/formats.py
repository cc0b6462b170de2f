"""Verdict conversion: engine verdicts become sink payloads.

Three formats: ``ndjson`` (one JSON object per verdict, machine-diffable
and byte-deterministic), ``text`` (one human line per fired trigger), and
``csv`` (fixed columns in stream declaration order).

Pipeline-health notices (time regressions, transport failures) share the
same channel with kind ``health``.
"""

from __future__ import annotations

import csv
import io
import json

from .analysis import TypedSpecification
from .engine import Verdict
from .values import format_seconds, seconds_from_ns


class NdjsonFormat:
    name = "ndjson"

    def header(self) -> str | None:
        return None

    def verdict(self, v: Verdict) -> str | None:
        doc: dict = {
            "time": seconds_from_ns(v.time_ns),
            "kind": v.kind.value,
            "triggers": list(v.triggers),
            "updates": dict(v.updates),
        }
        if v.warnings:
            doc["warnings"] = list(v.warnings)
        return json.dumps(doc, separators=(",", ":"), allow_nan=True)

    def health(self, time_ns: int, message: str) -> str | None:
        doc = {
            "time": seconds_from_ns(time_ns),
            "kind": "health",
            "triggers": [],
            "updates": {},
            "warnings": [message],
        }
        return json.dumps(doc, separators=(",", ":"))


class TextFormat:
    """Violations only: silent on verdicts without fired triggers."""

    name = "text"

    def header(self) -> str | None:
        return None

    def verdict(self, v: Verdict) -> str | None:
        lines = [
            f"{format_seconds(v.time_ns)}s [{v.kind.value}] TRIGGER: {msg}"
            for msg in v.triggers
        ]
        lines.extend(
            f"{format_seconds(v.time_ns)}s [{v.kind.value}] WARNING: {msg}"
            for msg in v.warnings
        )
        return "\n".join(lines) if lines else None

    def health(self, time_ns: int, message: str) -> str | None:
        return f"{format_seconds(time_ns)}s [health] {message}"


class CsvFormat:
    """Columns: time, kind, every visible stream in declaration order,
    then fired trigger messages joined with '; '."""

    name = "csv"

    def __init__(self, spec: TypedSpecification) -> None:
        self._columns = [s.name for s in spec.streams if not s.hidden]

    def _row(self, cells: list[str]) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(cells)
        return buf.getvalue()

    def header(self) -> str | None:
        return self._row(["time", "kind"] + self._columns + ["triggers"])

    def verdict(self, v: Verdict) -> str | None:
        cells = [format_seconds(v.time_ns), v.kind.value]
        for name in self._columns:
            if name in v.updates:
                cells.append(_cell(v.updates[name]))
            else:
                cells.append("")
        cells.append("; ".join(v.triggers))
        return self._row(cells)

    def health(self, time_ns: int, message: str) -> str | None:
        cells = [format_seconds(time_ns), "health"]
        cells.extend("" for _ in self._columns)
        cells.append(message)
        return self._row(cells)


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


FORMATS = {"ndjson": NdjsonFormat, "text": TextFormat, "csv": CsvFormat}


def make_format(name: str, spec: TypedSpecification):
    """Instantiate a verdict format by CLI name."""
    try:
        cls = FORMATS[name]
    except KeyError:
        raise ValueError(
            f"unknown format {name!r} (choose from {', '.join(sorted(FORMATS))})"
        )
    if cls is CsvFormat:
        return cls(spec)
    return cls()
