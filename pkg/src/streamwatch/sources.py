"""Event sources: CSV files/stdin, NDJSON over TCP/UDP, binary frames.

Sources iterate :class:`RawRecord` items interleaved with
:class:`RecordIssue` markers for malformed records (the stream continues).
A clean end of data ends iteration; transport failures raise
:class:`TransportError` so the pipeline can emit a final health verdict.
"""

from __future__ import annotations

import csv
import io
import json
import socket
import sys
from dataclasses import dataclass
from typing import Iterator, Mapping

from .adapter import RawKind, RawRecord
from .binary_frames import BinaryFrameSchema, FrameCodec
from .errors import ConfigError, TransportError


@dataclass(frozen=True)
class RecordIssue:
    """A record-level problem that does not stop the stream."""

    detail: str


SourceItem = RawRecord | RecordIssue


class EventSource:
    """Base class: iterate records, optionally declaring fields up front."""

    name = "source"

    def __iter__(self) -> Iterator[SourceItem]:
        raise NotImplementedError

    def declared(self) -> Mapping[str, RawKind] | None:
        """Field promises for construction-time mapping validation; None
        when the source cannot know its fields in advance (NDJSON)."""
        return None

    def stop(self) -> None:
        """Ask a live source to wind down; safe from another thread."""

    def close(self) -> None:
        pass


def _split_time(fields: dict, time_field: str):
    raw = fields.pop(time_field, None)
    if raw is None:
        return fields, None
    try:
        return fields, float(raw)
    except (TypeError, ValueError):
        raise ValueError(f"bad {time_field!r} value {raw!r}")


# ── CSV ──────────────────────────────────────────────────────────


class CsvSource(EventSource):
    """CSV with a header row; empty cells are absent fields.

    A row with the wrong column count yields a :class:`RecordIssue` and the
    stream continues.
    """

    name = "csv"

    def __init__(self, stream: io.TextIOBase, time_field: str = "time",
                 label: str = "csv") -> None:
        self._stream = stream
        self._time_field = time_field
        self.name = label
        self._reader = csv.reader(stream)
        try:
            header = next(self._reader)
        except StopIteration:
            raise ConfigError("CSV source is empty (no header row)")
        except (OSError, csv.Error) as e:
            raise TransportError(f"reading CSV header: {e}")
        self._header = [h.strip() for h in header]
        if len(set(self._header)) != len(self._header):
            raise ConfigError("CSV header has duplicate column names")

    @classmethod
    def open(cls, path: str, time_field: str = "time") -> "CsvSource":
        try:
            fh = open(path, "r", encoding="utf-8-sig", newline="")
        except OSError as e:
            raise ConfigError(f"cannot open CSV file {path!r}: {e}")
        return cls(fh, time_field, label=f"csv:{path}")

    @classmethod
    def stdin(cls, time_field: str = "time") -> "CsvSource":
        return cls(sys.stdin, time_field, label="csv:-")

    def declared(self) -> Mapping[str, RawKind]:
        return {
            h: RawKind.TEXT for h in self._header if h != self._time_field
        }

    def __iter__(self) -> Iterator[SourceItem]:
        n = len(self._header)
        row_no = 1
        while True:
            try:
                row = next(self._reader)
            except StopIteration:
                return
            except csv.Error as e:
                yield RecordIssue(f"row {row_no + 1}: {e}")
                continue
            except OSError as e:
                raise TransportError(f"reading CSV: {e}")
            row_no += 1
            if not row:
                continue
            if len(row) != n:
                yield RecordIssue(
                    f"row {row_no}: expected {n} columns, got {len(row)}"
                )
                continue
            fields = {
                h: cell for h, cell in zip(self._header, row) if cell != ""
            }
            try:
                fields, t = _split_time(fields, self._time_field)
            except ValueError as e:
                yield RecordIssue(f"row {row_no}: {e}")
                continue
            yield RawRecord(fields=fields, time=t)

    def close(self) -> None:
        if self._stream is not sys.stdin:
            self._stream.close()


# ── NDJSON framing ───────────────────────────────────────────────


def _parse_ndjson_line(line: bytes, time_field: str) -> SourceItem:
    try:
        obj = json.loads(line)
    except ValueError as e:
        return RecordIssue(f"bad JSON line: {e}")
    if not isinstance(obj, dict):
        return RecordIssue(f"expected a JSON object, got {type(obj).__name__}")
    try:
        fields, t = _split_time(obj, time_field)
    except ValueError as e:
        return RecordIssue(str(e))
    return RawRecord(fields=fields, time=t)


class NdjsonTcpConnectSource(EventSource):
    """Connects to a peer and reads newline-delimited JSON objects.

    A connection closed at a line boundary is a clean end of stream;
    closed mid-line it is a transport failure (records already delivered
    stand).
    """

    def __init__(self, host: str, port: int, time_field: str = "time") -> None:
        self.name = f"tcp-connect:{host}:{port}"
        self._time_field = time_field
        try:
            self._sock = socket.create_connection((host, port), timeout=10.0)
            self._sock.settimeout(None)
        except OSError as e:
            raise TransportError(f"connecting to {host}:{port}: {e}")

    def __iter__(self) -> Iterator[SourceItem]:
        buf = bytearray()
        sock = self._sock
        while True:
            try:
                chunk = sock.recv(65536)
            except OSError as e:
                raise TransportError(f"{self.name}: {e}")
            if not chunk:
                if buf.strip():
                    raise TransportError(
                        f"{self.name}: peer closed mid-record "
                        f"({len(buf)} unterminated bytes)"
                    )
                return
            buf += chunk
            while True:
                nl = buf.find(b"\n")
                if nl < 0:
                    break
                line = bytes(buf[:nl])
                del buf[: nl + 1]
                if line.strip():
                    yield _parse_ndjson_line(line, self._time_field)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class NdjsonTcpListenSource(EventSource):
    """Accepts one peer at a time; goes back to accepting after a
    disconnect so monitoring resumes across reconnects."""

    def __init__(
        self,
        host: str,
        port: int,
        time_field: str = "time",
        max_connections: int | None = None,
    ) -> None:
        self.name = f"tcp-listen:{host}:{port}"
        self._time_field = time_field
        self._max_connections = max_connections
        self._stopped = False
        try:
            self._server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self._server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self._server.bind((host, port))
            self._server.listen(1)
            self._server.settimeout(0.2)
        except OSError as e:
            raise TransportError(f"binding {host}:{port}: {e}")

    @property
    def address(self) -> tuple[str, int]:
        return self._server.getsockname()[:2]

    def __iter__(self) -> Iterator[SourceItem]:
        served = 0
        while not self._stopped:
            if self._max_connections is not None and served >= self._max_connections:
                return
            try:
                conn, _ = self._server.accept()
            except socket.timeout:
                continue
            except OSError as e:
                if self._stopped:
                    return
                raise TransportError(f"{self.name}: accept: {e}")
            served += 1
            conn.settimeout(0.2)
            buf = bytearray()
            while not self._stopped:
                try:
                    chunk = conn.recv(65536)
                except socket.timeout:
                    continue
                except OSError:
                    break  # peer reset; wait for the next connection
                if not chunk:
                    break  # disconnect; unterminated tail is dropped
                buf += chunk
                while True:
                    nl = buf.find(b"\n")
                    if nl < 0:
                        break
                    line = bytes(buf[:nl])
                    del buf[: nl + 1]
                    if line.strip():
                        yield _parse_ndjson_line(line, self._time_field)
            conn.close()

    def stop(self) -> None:
        self._stopped = True

    def close(self) -> None:
        self._stopped = True
        try:
            self._server.close()
        except OSError:
            pass


class NdjsonUdpSource(EventSource):
    """Each datagram carries one NDJSON object; loss is not compensated."""

    def __init__(self, host: str, port: int, time_field: str = "time") -> None:
        self.name = f"udp:{host}:{port}"
        self._time_field = time_field
        self._stopped = False
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind((host, port))
            self._sock.settimeout(0.2)
        except OSError as e:
            raise TransportError(f"binding udp {host}:{port}: {e}")

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()[:2]

    def __iter__(self) -> Iterator[SourceItem]:
        while not self._stopped:
            try:
                datagram, _ = self._sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError as e:
                if self._stopped:
                    return
                raise TransportError(f"{self.name}: {e}")
            if datagram.strip():
                yield _parse_ndjson_line(datagram.rstrip(b"\n"), self._time_field)

    def stop(self) -> None:
        self._stopped = True

    def close(self) -> None:
        self._stopped = True
        try:
            self._sock.close()
        except OSError:
            pass


# ── binary frames ────────────────────────────────────────────────


class BinarySource(EventSource):
    """Decodes fixed-length frames per a :class:`BinaryFrameSchema`.

    With magic bytes configured, desync resynchronizes by byte scan
    (``skipped_bytes`` counts the cost); a partial trailing frame at EOF
    is reported as an issue, not an error.
    """

    def __init__(
        self,
        stream: io.BufferedIOBase,
        schema: BinaryFrameSchema,
        time_field: str = "time",
        label: str = "binary",
    ) -> None:
        self.name = label
        self._stream = stream
        self._codec = FrameCodec(schema)
        self._schema = schema
        self._time_field = time_field
        self.skipped_bytes = 0

    @classmethod
    def open(
        cls, path: str, schema: BinaryFrameSchema, time_field: str = "time"
    ) -> "BinarySource":
        try:
            fh = open(path, "rb")
        except OSError as e:
            raise ConfigError(f"cannot open binary file {path!r}: {e}")
        return cls(fh, schema, time_field, label=f"binary:{path}")

    def declared(self) -> Mapping[str, RawKind]:
        return {
            f.name: f.raw_kind
            for f in self._schema.fields
            if f.name != self._time_field
        }

    def __iter__(self) -> Iterator[SourceItem]:
        magic = self._schema.magic
        frame_len = self._codec.frame_length
        buf = bytearray()
        eof = False
        while True:
            while len(buf) < frame_len and not eof:
                try:
                    chunk = self._stream.read(65536)
                except OSError as e:
                    raise TransportError(f"{self.name}: {e}")
                if not chunk:
                    eof = True
                    break
                buf += chunk
            if magic:
                at = buf.find(magic)
                if at < 0:
                    # keep a potential magic prefix at the tail
                    keep = len(magic) - 1
                    if len(buf) > keep:
                        self.skipped_bytes += len(buf) - keep
                        del buf[: len(buf) - keep]
                    if eof:
                        break
                    continue
                if at > 0:
                    self.skipped_bytes += at
                    del buf[:at]
            if len(buf) < frame_len:
                if eof:
                    break
                continue
            frame = bytes(buf[:frame_len])
            del buf[:frame_len]
            fields = self._codec.decode(frame)
            try:
                fields, t = _split_time(fields, self._time_field)
            except ValueError as e:
                yield RecordIssue(str(e))
                continue
            yield RawRecord(fields=fields, time=t)
        if buf and buf.strip(b"\x00"):
            yield RecordIssue(
                f"partial trailing frame discarded ({len(buf)} bytes)"
            )

    def close(self) -> None:
        self._stream.close()


# ── source configuration ─────────────────────────────────────────


def _host_port(rest: str, what: str) -> tuple[str, int]:
    host, sep, port = rest.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"{what} needs HOST:PORT, got {rest!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"bad port in {rest!r}")


def make_source(
    spec_str: str,
    time_field: str = "time",
    frame_schema: BinaryFrameSchema | None = None,
) -> EventSource:
    """Build a source from its CLI form.

    Kinds: ``csv:PATH`` (``csv:-`` for stdin), ``tcp-listen:HOST:PORT``,
    ``tcp-connect:HOST:PORT``, ``udp:HOST:PORT``, ``binary:PATH``.
    """
    kind, sep, rest = spec_str.partition(":")
    if not sep:
        raise ConfigError(f"source needs KIND:ARGS, got {spec_str!r}")
    if kind == "csv":
        if rest == "-":
            return CsvSource.stdin(time_field)
        return CsvSource.open(rest, time_field)
    if kind == "tcp-listen":
        host, port = _host_port(rest, "tcp-listen")
        return NdjsonTcpListenSource(host, port, time_field)
    if kind == "tcp-connect":
        host, port = _host_port(rest, "tcp-connect")
        return NdjsonTcpConnectSource(host, port, time_field)
    if kind == "udp":
        host, port = _host_port(rest, "udp")
        return NdjsonUdpSource(host, port, time_field)
    if kind == "binary":
        if frame_schema is None:
            raise ConfigError("binary source requires --frame-schema")
        return BinarySource.open(rest, frame_schema, time_field)
    raise ConfigError(
        f"unknown source kind {kind!r} "
        "(csv, tcp-listen, tcp-connect, udp, binary)"
    )
