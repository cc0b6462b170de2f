"""Fixed-length binary frame codec driven by a declarative schema.

A frame is an optional magic/sync prefix followed by fixed-width fields.
The decoder scans for the magic on desync, counting skipped bytes; a
partial trailing frame is a warning, not an error.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

from .adapter import RawKind
from .errors import ConfigError

_STRUCT_CODES = {
    "u8": "B",
    "u16": "H",
    "u32": "I",
    "u64": "Q",
    "i8": "b",
    "i16": "h",
    "i32": "i",
    "i64": "q",
    "f32": "f",
    "f64": "d",
}

_WIDTHS = {
    "u8": 1, "u16": 2, "u32": 4, "u64": 8,
    "i8": 1, "i16": 2, "i32": 4, "i64": 8,
    "f32": 4, "f64": 8,
}

_ENDIAN = {"little": "<", "big": ">", "le": "<", "be": ">"}


@dataclass(frozen=True)
class FrameField:
    name: str
    type_code: str
    endianness: str = "little"

    @property
    def width(self) -> int:
        return _WIDTHS[self.type_code]

    @property
    def raw_kind(self) -> RawKind:
        return RawKind.FLOAT if self.type_code.startswith("f") else RawKind.INT


@dataclass(frozen=True)
class BinaryFrameSchema:
    fields: tuple[FrameField, ...]
    magic: bytes = b""

    @property
    def frame_length(self) -> int:
        return len(self.magic) + sum(f.width for f in self.fields)

    def declared(self) -> dict[str, RawKind]:
        return {f.name: f.raw_kind for f in self.fields}

    @staticmethod
    def from_dict(data: dict) -> "BinaryFrameSchema":
        if "fields" not in data or not data["fields"]:
            raise ConfigError("frame schema needs a non-empty 'fields' list")
        default_endian = data.get("endianness", "little")
        if default_endian not in _ENDIAN:
            raise ConfigError(f"unknown endianness {default_endian!r}")
        magic = bytes.fromhex(data.get("magic", ""))
        fields: list[FrameField] = []
        seen: set[str] = set()
        for entry in data["fields"]:
            name = entry.get("name")
            type_code = entry.get("type")
            if not name or type_code not in _STRUCT_CODES:
                raise ConfigError(
                    f"frame field needs a name and a type in "
                    f"{{{', '.join(sorted(_STRUCT_CODES))}}}: got {entry!r}"
                )
            if name in seen:
                raise ConfigError(f"duplicate frame field {name!r}")
            seen.add(name)
            endian = entry.get("endianness", default_endian)
            if endian not in _ENDIAN:
                raise ConfigError(f"unknown endianness {endian!r} on {name!r}")
            if "width" in entry and entry["width"] != _WIDTHS[type_code]:
                raise ConfigError(
                    f"field {name!r}: width {entry['width']} does not match "
                    f"type {type_code} ({_WIDTHS[type_code]} bytes)"
                )
            fields.append(FrameField(name, type_code, endian))
        return BinaryFrameSchema(fields=tuple(fields), magic=magic)

    @staticmethod
    def from_file(path) -> "BinaryFrameSchema":
        with open(path, "r", encoding="utf-8") as fh:
            return BinaryFrameSchema.from_dict(json.load(fh))


class FrameCodec:
    """Precompiled encoder/decoder for one schema."""

    def __init__(self, schema: BinaryFrameSchema) -> None:
        self.schema = schema
        self._parts: list[tuple[str, struct.Struct, int]] = []
        offset = len(schema.magic)
        for f in schema.fields:
            st = struct.Struct(_ENDIAN[f.endianness] + _STRUCT_CODES[f.type_code])
            self._parts.append((f.name, st, offset))
            offset += f.width
        self.frame_length = offset

    def encode(self, values: dict) -> bytes:
        out = bytearray(self.schema.magic)
        for name, st, _ in self._parts:
            if name not in values:
                raise ValueError(f"missing value for frame field {name!r}")
            out += st.pack(values[name])
        return bytes(out)

    def decode(self, frame: bytes) -> dict[str, object]:
        return {
            name: st.unpack_from(frame, offset)[0]
            for name, st, offset in self._parts
        }
