"""Verdict sinks: stdout, file, TCP connection."""

from __future__ import annotations

import socket
import sys

from .errors import ConfigError, TransportError


class StdoutSink:
    name = "stdout"

    def write(self, line: str) -> None:
        sys.stdout.write(line + "\n")
        sys.stdout.flush()

    def close(self) -> None:
        pass


class FileSink:
    def __init__(self, path: str) -> None:
        self.name = f"file:{path}"
        try:
            self._fh = open(path, "w", encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot open sink file {path!r}: {e}")

    def write(self, line: str) -> None:
        self._fh.write(line + "\n")

    def close(self) -> None:
        self._fh.close()


class TcpSink:
    """Connects once and streams verdict lines; the ground-station side."""

    def __init__(self, host: str, port: int) -> None:
        self.name = f"tcp:{host}:{port}"
        try:
            self._sock = socket.create_connection((host, port), timeout=10.0)
        except OSError as e:
            raise TransportError(f"connecting sink {host}:{port}: {e}")

    def write(self, line: str) -> None:
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as e:
            raise TransportError(f"{self.name}: {e}")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def make_sink(spec_str: str):
    """Build a sink from its CLI form: stdout | file:PATH | tcp:HOST:PORT."""
    if spec_str == "stdout":
        return StdoutSink()
    kind, sep, rest = spec_str.partition(":")
    if kind == "file" and sep:
        return FileSink(rest)
    if kind == "tcp" and sep:
        host, s2, port = rest.rpartition(":")
        if not s2 or not host:
            raise ConfigError(f"tcp sink needs HOST:PORT, got {rest!r}")
        try:
            return TcpSink(host, int(port))
        except ValueError:
            raise ConfigError(f"bad port in {rest!r}")
    raise ConfigError(
        f"unknown sink {spec_str!r} (stdout, file:PATH, tcp:HOST:PORT)"
    )
