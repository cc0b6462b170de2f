"""The run pipeline: one source, one factory, one monitor, one sink.

Data mode replays record timestamps (optionally paced against the wall
clock); realtime mode stamps records on arrival and fires deadlines from
the wall clock while the source idles.  Connector and conversion failures
become health verdicts on the sink; no failure ends the run without one.
"""

from __future__ import annotations

import queue
import threading
import time as _time
from dataclasses import dataclass, field

from .adapter import ConversionError, EventFactory, TimeMode
from .analysis import TypedSpecification
from .engine import Event, Monitor, Verdict
from .errors import TransportError
from .sources import EventSource, RawRecord, RecordIssue
from .values import NS_PER_SEC, ns_from_seconds


@dataclass
class RunSummary:
    events: int = 0
    verdicts: int = 0
    triggers_fired: int = 0
    records_skipped: int = 0
    record_errors: int = 0
    records_dropped: int = 0
    transport_error: str | None = None
    interrupted: bool = False

    def render(self) -> str:
        parts = [
            f"events={self.events}",
            f"verdicts={self.verdicts}",
            f"triggers={self.triggers_fired}",
            f"skipped={self.records_skipped}",
            f"errors={self.record_errors + self.records_dropped}",
        ]
        line = "summary: " + " ".join(parts)
        if self.transport_error:
            line += f"\ntransport error: {self.transport_error}"
        if self.interrupted:
            line += "\ninterrupted"
        return line


@dataclass
class Pipeline:
    """Drives one monitoring run; construct via :func:`build_pipeline` or
    directly for tests."""

    spec: TypedSpecification
    source: EventSource
    factory: EventFactory
    formatter: object
    sink: object
    time_mode: TimeMode = TimeMode.DATA
    speed: float = 0.0  # data mode only; 0 = as fast as possible
    start_at_zero: bool = False  # else: monitor starts at first event time
    queue_size: int = 256
    sleep_fn: object = _time.sleep
    wall_clock: object = _time.monotonic
    realtime_clock: object = None  # shared with the factory in realtime mode
    summary: RunSummary = field(default_factory=RunSummary)

    _monitor: Monitor | None = None
    _last_ns: int = 0

    def run(self) -> RunSummary:
        header = self.formatter.header()
        if header is not None:
            self.sink.write(header)
        try:
            if self.time_mode is TimeMode.DATA:
                self._run_data()
            else:
                self._run_realtime()
        except TransportError as e:
            self.summary.transport_error = str(e)
            self._health(str(e))
        except KeyboardInterrupt:
            self.summary.interrupted = True
        finally:
            self.source.close()
            self.sink.close()
        return self.summary

    # ── data (replay) mode ───────────────────────────────────────

    def _run_data(self) -> None:
        wall_start: float | None = None
        first_ns: int | None = None
        for item in self.source:
            event = self._convert(item)
            if event is None:
                continue
            if self._monitor is None:
                start = 0 if self.start_at_zero else event.time_ns
                self._monitor = Monitor(self.spec, start)
                first_ns = event.time_ns
                wall_start = self.wall_clock()
            if self.speed > 0:
                self._pace(event.time_ns, first_ns, wall_start)
            self._emit(self._monitor.accept_event(event))
            self._last_ns = event.time_ns

    def _pace(self, ev_ns: int, first_ns: int, wall_start: float) -> None:
        """Sleep out the data-time delta (scaled), firing deadlines that
        fall inside the gap at their paced instants."""

        def wall_for(ns: int) -> float:
            return wall_start + (ns - first_ns) / NS_PER_SEC / self.speed

        while True:
            due = self._monitor.next_deadline_ns()
            if due is None or due >= ev_ns:
                break
            self._sleep_until(wall_for(due))
            self._emit(self._monitor.advance_time(due))
        self._sleep_until(wall_for(ev_ns))

    def _sleep_until(self, wall: float) -> None:
        delta = wall - self.wall_clock()
        if delta > 0:
            self.sleep_fn(delta)

    # ── realtime (live) mode ─────────────────────────────────────

    def _run_realtime(self) -> None:
        clock = self.realtime_clock
        if clock is None:
            raise RuntimeError("realtime pipeline needs a shared clock")
        self._monitor = Monitor(self.spec, ns_from_seconds(clock()))

        q: queue.Queue = queue.Queue(maxsize=self.queue_size)
        done = object()

        def produce() -> None:
            try:
                for item in self.source:
                    q.put(item)
                q.put(done)
            except TransportError as e:
                q.put(e)

        producer = threading.Thread(target=produce, daemon=True)
        producer.start()

        while True:
            timeout = 0.2
            due = self._monitor.next_deadline_ns()
            if due is not None:
                timeout = max(0.0, min(timeout, due / NS_PER_SEC - clock()))
            try:
                item = q.get(timeout=timeout)
            except queue.Empty:
                self._emit(self._monitor.advance_time(ns_from_seconds(clock())))
                continue
            if item is done:
                return
            if isinstance(item, TransportError):
                raise item
            event = self._convert(item)
            if event is None:
                continue
            # accept_event fires deadlines due before the event itself
            self._emit(self._monitor.accept_event(event))
            self._last_ns = event.time_ns

    # ── shared plumbing ──────────────────────────────────────────

    def _convert(self, item) -> Event | None:
        if isinstance(item, RecordIssue):
            self.summary.record_errors += 1
            return None
        assert isinstance(item, RawRecord)
        try:
            event = self.factory.create(item)
        except ConversionError as e:
            self.summary.records_dropped += 1
            self._health(str(e))
            return None
        if event is None:
            self.summary.records_skipped += 1
            return None
        self.summary.events += 1
        return event

    def _emit(self, verdicts: list[Verdict]) -> None:
        for v in verdicts:
            self.summary.verdicts += 1
            self.summary.triggers_fired += len(v.triggers)
            line = self.formatter.verdict(v)
            if line is not None:
                self.sink.write(line)
            self._last_ns = v.time_ns

    def _health(self, message: str) -> None:
        line = self.formatter.health(self._last_ns, message)
        if line is not None:
            self.sink.write(line)
