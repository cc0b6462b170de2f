"""Deterministic evaluation engine.

A :class:`Monitor` consumes timestamped events and clock advances and emits
:class:`Verdict` objects.  Identical (specification, event sequence) pairs
produce identical verdict sequences; wall-clock time never enters the
engine.

Cycle semantics:

* Deadlines strictly before an event run as separate cycles in due order;
  a deadline exactly at the event time merges into the event's cycle.
* Within a cycle: input values land first, spawn/close transitions run
  (close before spawn, and close wins a tie with the instance's own
  deadline), then streams evaluate in layer order, triggers last among
  their layer peers.
* Equal-timestamp events are separate cycles in arrival order.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .analysis import (
    Pacing,
    PacingKind,
    StreamInfo,
    StreamKind,
    TypedSpecification,
)
from .ast_nodes import OutputDecl, TriggerDecl
from .errors import MonitorInputError, TimeRegression
from .evaluator import Compiler, EvalFn, Runtime
from .values import Value, format_seconds, seconds_from_ns, value_matches_type


class CycleKind(enum.Enum):
    EVENT = "event"
    DEADLINE = "deadline"


@dataclass(frozen=True)
class Event:
    """One timestamped partial assignment of input-stream values."""

    time_ns: int
    values: Mapping[str, Value]


@dataclass(frozen=True)
class Verdict:
    """The outcome of one evaluation cycle."""

    time_ns: int
    kind: CycleKind
    triggers: tuple[str, ...]
    updates: dict[str, Value]
    warnings: tuple[str, ...] = ()

    @property
    def time_seconds(self) -> float:
        return seconds_from_ns(self.time_ns)

    def __str__(self) -> str:
        msg = f"[{format_seconds(self.time_ns)}s {self.kind.value}]"
        if self.triggers:
            msg += " " + "; ".join(self.triggers)
        return msg


@dataclass
class _CompiledStream:
    info: StreamInfo
    body: EvalFn | None = None
    when: EvalFn | None = None
    spawn: EvalFn | None = None
    close: EvalFn | None = None
    period_ns: int = 0
    event_set: frozenset[str] = frozenset()
    trigger_pos: int = -1  # position in the trigger list, -1 otherwise
    message: str = ""


def new_monitor(spec: TypedSpecification, start_ns: int = 0) -> "Monitor":
    """Fresh monitor: periodic streams get their first deadline at
    start + period; spawned streams begin non-existent; buffers empty."""
    return Monitor(spec, start_ns)


class Monitor:
    """Single-threaded evaluation engine for one analyzed specification.

    Callers serialize :meth:`accept_event` / :meth:`advance_time`; the
    instance may move between threads but is never shared mutably.
    """

    def __init__(self, spec: TypedSpecification, start_ns: int = 0) -> None:
        self.spec = spec
        self.start_ns = start_ns
        self.last_time_ns = start_ns

        n = len(spec.streams)
        self.rt = Runtime(n)
        # ring buffers must exist at their final size before compilation:
        # closures capture them directly
        for info in spec.streams:
            self.rt.buffers[info.index] = deque(maxlen=max(info.memory_bound, 1))
        compiler = Compiler(spec, self.rt)

        self._input_types = {
            s.name: s.ty for s in spec.streams if s.kind is StreamKind.INPUT
        }
        self._input_order = [
            s.name for s in spec.streams if s.kind is StreamKind.INPUT
        ]
        self._by_name = spec.by_name

        trigger_pos = {t.stream_index: i for i, t in enumerate(spec.triggers)}
        self._compiled: list[_CompiledStream] = []
        for info in spec.streams:
            cs = _CompiledStream(info=info)
            if info.kind is not StreamKind.INPUT:
                decl = info.decl
                if isinstance(decl, OutputDecl):
                    cs.body = compiler.compile(decl.body)
                    if decl.eval_when is not None:
                        cs.when = compiler.compile(decl.eval_when)
                    if decl.spawn is not None:
                        cs.spawn = compiler.compile(decl.spawn)
                        self.rt.alive[info.index] = False
                    if decl.close is not None:
                        cs.close = compiler.compile(decl.close)
                elif isinstance(decl, TriggerDecl):
                    cs.body = compiler.compile(decl.condition)
                    cs.trigger_pos = trigger_pos[info.index]
                    cs.message = spec.triggers[cs.trigger_pos].message
            if info.pacing.kind is PacingKind.PERIODIC:
                cs.period_ns = info.pacing.period_ns
            elif info.pacing.kind is PacingKind.EVENT:
                cs.event_set = info.pacing.events
            self._compiled.append(cs)

        # evaluation order: layers, declaration order within a layer
        self._eval_order = sorted(
            (c for c in self._compiled if c.info.kind is not StreamKind.INPUT),
            key=lambda c: (c.info.layer, c.info.index),
        )
        self._spawned = [c for c in self._compiled if c.spawn is not None]
        self._periodic = [
            c for c in self._compiled if c.info.pacing.kind is PacingKind.PERIODIC
        ]
        # next deadline per stream index; None while not scheduled
        self._next_due: dict[int, int | None] = {}
        for c in self._periodic:
            if c.spawn is None:
                self._next_due[c.info.index] = start_ns + c.period_ns
            else:
                self._next_due[c.info.index] = None

        self._spawn_time: dict[int, int] = {}

    # ── public API ───────────────────────────────────────────────

    def accept_event(self, event: Event) -> list[Verdict]:
        """Process one event; returns verdicts for every cycle it caused.

        Pending deadlines strictly before the event time run first, each as
        its own cycle; a deadline due exactly at the event time merges into
        the event cycle.
        """
        t = event.time_ns
        if t < self.last_time_ns:
            raise TimeRegression(
                f"event at {format_seconds(t)}s is before the monitor clock "
                f"({format_seconds(self.last_time_ns)}s)",
                self.last_time_ns,
                t,
            )
        values = self._validated(event.values)
        verdicts = self._run_deadlines_before(t)
        due = self._due_at(t)
        verdicts.append(self._cycle(t, CycleKind.EVENT, values, due))
        self.last_time_ns = t
        return verdicts

    def advance_time(self, now_ns: int) -> list[Verdict]:
        """Advance the monitor clock, firing every deadline due ≤ now."""
        if now_ns < self.last_time_ns:
            raise TimeRegression(
                f"clock advance to {format_seconds(now_ns)}s is before the "
                f"monitor clock ({format_seconds(self.last_time_ns)}s)",
                self.last_time_ns,
                now_ns,
            )
        verdicts: list[Verdict] = []
        while True:
            due_time = self._min_due()
            if due_time is None or due_time > now_ns:
                break
            due = self._due_at(due_time)
            verdicts.append(self._cycle(due_time, CycleKind.DEADLINE, None, due))
            self.last_time_ns = due_time
        self.last_time_ns = max(self.last_time_ns, now_ns)
        return verdicts

    def next_deadline_ns(self) -> int | None:
        """Earliest pending deadline, for live-mode schedulers."""
        return self._min_due()

    # ── internals ────────────────────────────────────────────────

    def _validated(self, values: Mapping[str, Value]) -> dict[str, Value]:
        if not values:
            raise MonitorInputError("event carries no input values")
        for name, v in values.items():
            ty = self._input_types.get(name)
            if ty is None:
                raise MonitorInputError(f"unknown input stream {name!r}")
            if not value_matches_type(v, ty):
                raise MonitorInputError(
                    f"value {v!r} does not match {name}: {ty}"
                )
        return dict(values)

    def _min_due(self) -> int | None:
        due = [d for d in self._next_due.values() if d is not None]
        return min(due) if due else None

    def _due_at(self, t: int) -> set[int]:
        return {i for i, d in self._next_due.items() if d == t}

    def _run_deadlines_before(self, t: int) -> list[Verdict]:
        verdicts: list[Verdict] = []
        while True:
            due_time = self._min_due()
            if due_time is None or due_time >= t:
                break
            due = self._due_at(due_time)
            verdicts.append(self._cycle(due_time, CycleKind.DEADLINE, None, due))
            self.last_time_ns = due_time
        return verdicts

    def _pacing_fires(
        self,
        cs: _CompiledStream,
        kind: CycleKind,
        values: dict[str, Value] | None,
        due: set[int],
    ) -> bool:
        pk = cs.info.pacing.kind
        if pk is PacingKind.PERIODIC:
            return cs.info.index in due
        if pk is PacingKind.ANY:
            return kind is CycleKind.EVENT
        return values is not None and cs.event_set <= values.keys()

    def _condition_fires(
        self,
        pacing: Pacing | None,
        kind: CycleKind,
        values: dict[str, Value] | None,
    ) -> bool:
        if pacing is None:
            return False
        if pacing.kind is PacingKind.EVENT:
            return values is not None and pacing.events <= values.keys()
        if pacing.kind is PacingKind.ANY:
            return kind is CycleKind.EVENT
        return False

    def _cycle(
        self,
        t: int,
        kind: CycleKind,
        values: dict[str, Value] | None,
        due: set[int],
    ) -> Verdict:
        rt = self.rt
        rt.serial += 1
        rt.now_ns = t
        rt.warnings = []
        serial = rt.serial
        updates: dict[str, Value] = {}

        # 1. input values land first
        if values:
            for name in self._input_order:
                if name in values:
                    v = values[name]
                    idx = self._by_name[name]
                    rt.buffers[idx].append(v)
                    rt.stamps[idx] = serial
                    for w in rt.windows_by_target.get(idx, ()):
                        w.store.append((t, v))
                    updates[name] = v

        # 2. spawn/close transitions (close first; close beats a deadline
        #    due in this same cycle)
        for cs in self._spawned:
            idx = cs.info.index
            if (
                rt.alive[idx]
                and cs.close is not None
                and self._condition_fires(cs.info.close_pacing, kind, values)
                and cs.close()
            ):
                rt.alive[idx] = False
                rt.buffers[idx].clear()
                if idx in self._next_due:
                    self._next_due[idx] = None
                due.discard(idx)
            if not rt.alive[idx] and self._condition_fires(
                cs.info.spawn_pacing, kind, values
            ) and cs.spawn():
                rt.alive[idx] = True
                rt.buffers[idx].clear()
                self._spawn_time[idx] = t
                if cs.period_ns:
                    self._next_due[idx] = t + cs.period_ns
                    # freshly spawned: no deadline before spawn+period
                    due.discard(idx)

        # 3. stream evaluation in layer order
        fired: list[str | None] = [None] * len(self.spec.triggers)
        for cs in self._eval_order:
            info = cs.info
            idx = info.index
            if rt.alive[idx] is False:
                continue
            if not self._pacing_fires(cs, kind, values, due):
                continue
            if cs.when is not None and not cs.when():
                continue
            if cs.trigger_pos >= 0:
                rt.nan_compare = False
                v = cs.body()
                if rt.nan_compare:
                    rt.warn(f"NaN observed in trigger condition: {cs.message}")
            else:
                v = cs.body()
            rt.buffers[idx].append(v)
            rt.stamps[idx] = serial
            for w in rt.windows_by_target.get(idx, ()):
                w.store.append((t, v))
            if not info.hidden:
                updates[info.name] = v
            elif cs.trigger_pos >= 0 and v:
                fired[cs.trigger_pos] = cs.message

        # 4. schedule the next deadline for everything that was due
        for idx in due:
            if self._next_due.get(idx) is not None:
                self._next_due[idx] += self._compiled[idx].period_ns

        # 5. window retention invariant: keep (t - d, t]
        for w in rt.windows:
            cut = t - w.duration_ns
            store = w.store
            while store and store[0][0] <= cut:
                store.popleft()

        return Verdict(
            time_ns=t,
            kind=kind,
            triggers=tuple(m for m in fired if m is not None),
            updates=updates,
            warnings=tuple(rt.warnings),
        )
