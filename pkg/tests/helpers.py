"""Shared test utilities: monitor drivers, oracles, and a grammar fuzzer."""

from __future__ import annotations

import random

from streamwatch.analysis import analyze
from streamwatch.engine import Event, Monitor, Verdict
from streamwatch.parser import parse
from streamwatch.values import NS_PER_SEC

MS = NS_PER_SEC // 1000


def build(spec_text: str, start_ns: int = 0) -> Monitor:
    return Monitor(analyze(parse(spec_text)), start_ns)


def run_spec(spec_text: str, events, start_ns: int = 0) -> list[Verdict]:
    """Feed [(time_ns, {stream: value})] through a fresh monitor."""
    mon = build(spec_text, start_ns)
    out: list[Verdict] = []
    for t, values in events:
        out.extend(mon.accept_event(Event(t, values)))
    return out


# ── brute-force sliding-window oracle ────────────────────────────


def window_oracle(trace, func: str, now_ns: int, duration_ns: int,
                  default=None):
    """Recompute a window aggregate from the full trace.

    ``trace``: [(time_ns, value)] of every target-stream evaluation, in
    time order.  Retains (now - d, now]; naive left-to-right arithmetic so
    float results match an engine that aggregates in the same order.
    """
    values = [v for (t, v) in trace if now_ns - duration_ns < t <= now_ns]
    if func == "count":
        return len(values)
    if not values:
        if func == "sum":
            return 0.0 if any(isinstance(v, float) for _, v in trace) else 0
        return default
    if func == "avg":
        total = 0.0
        for v in values:
            total += v
        return total / len(values)
    if func == "sum":
        total = 0.0 if isinstance(values[0], float) else 0
        for v in values:
            total += v
        return total
    return min(values) if func == "min" else max(values)


# ── watchdog trace generation + oracle ───────────────────────────

WATCHDOG_SPEC = """
input seq_number: Int64
input lost_connection_to_master: Bool
input switch_to_secondary: Bool
input both_rc_disconnected: Bool
output main_fallback_valid_dyn
  spawn when lost_connection_to_master
  close when switch_to_secondary or both_rc_disconnected
  eval @200ms with false
output main_fallback_valid @true := main_fallback_valid_dyn.hold(or: true)
trigger not main_fallback_valid "fallback missed"
"""


def status(lost=False, switch=False, both=False) -> dict:
    return {
        "lost_connection_to_master": lost,
        "switch_to_secondary": switch,
        "both_rc_disconnected": both,
    }


def make_watchdog_trace(rng: random.Random):
    """One randomized fallback episode with heartbeat telemetry.

    Returns (events, close_offset_ns or None).  Heartbeats are dense
    enough that a violation always has an observation instant: at least
    one plain event lies at/after the 200ms deadline and before any later
    mitigation.
    """
    events = []
    t = 0
    # lead-in heartbeats
    for _ in range(rng.randrange(0, 4)):
        events.append((t, status()))
        t += rng.randrange(10, 60) * MS
    spawn_t = t
    events.append((spawn_t, status(lost=True)))

    close_kind = rng.choice(["none", "early", "boundary", "late"])
    if close_kind == "none":
        close_off = None
    elif close_kind == "early":
        close_off = rng.randrange(10, 200) * MS
    elif close_kind == "boundary":
        close_off = 200 * MS
    else:
        close_off = rng.randrange(201, 400) * MS

    flag = rng.choice(["switch_to_secondary", "both_rc_disconnected"])
    deadline = spawn_t + 200 * MS

    heartbeats = []
    hb = spawn_t
    horizon = spawn_t + (close_off if close_off is not None else 450 * MS)
    while hb < horizon:
        hb += rng.randrange(10, 70) * MS
        heartbeats.append(hb)
    if close_off is not None and close_off > 200 * MS:
        # guarantee an observation instant inside (deadline, close)
        gap_lo, gap_hi = deadline, spawn_t + close_off
        if not any(gap_lo <= h < gap_hi for h in heartbeats):
            heartbeats.append(gap_lo + (gap_hi - gap_lo) // 2)
    if close_off is None and not any(h >= deadline for h in heartbeats):
        heartbeats.append(deadline + 37 * MS)

    for h in heartbeats:
        if close_off is not None and h >= spawn_t + close_off:
            continue
        events.append((h, status()))
    if close_off is not None:
        events.append(
            (spawn_t + close_off, status(**{flag: True}))
        )
        # trailing heartbeats after mitigation
        tail = spawn_t + close_off
        for _ in range(rng.randrange(1, 4)):
            tail += rng.randrange(10, 70) * MS
            events.append((tail, status()))
    events.sort(key=lambda e: e[0])
    return events, spawn_t, close_off


def watchdog_oracle(spawn_t: int, close_off) -> bool:
    """Trigger fires iff no close lands in (spawn, spawn + 200ms]."""
    return close_off is None or close_off > 200 * MS


# ── grammar fuzzer (valid specs only) ────────────────────────────

_TYPES = ["Int64", "UInt64", "UInt8", "Float64", "Bool"]


def fuzz_spec(rng: random.Random) -> str:
    """A random syntactically valid specification (it need not analyze)."""
    n_inputs = rng.randrange(1, 5)
    n_outputs = rng.randrange(0, 5)
    n_triggers = rng.randrange(0, 3)
    names = [f"s{i}" for i in range(n_inputs + n_outputs)]
    lines = []
    for i in range(n_inputs):
        lines.append(f"input {names[i]}: {rng.choice(_TYPES)}")
    if rng.random() < 0.4:
        lines.append(f"constant c0: Float64 := {rng.uniform(-5, 5)!r}")
        names.append("c0")

    def expr(depth: int) -> str:
        if depth <= 0 or rng.random() < 0.3:
            choice = rng.randrange(5)
            if choice == 0:
                return str(rng.randrange(-20, 100))
            if choice == 1:
                return repr(rng.uniform(-10, 10))
            if choice == 2:
                return rng.choice(["true", "false"])
            return rng.choice(names)
        kind = rng.randrange(8)
        if kind == 0:
            op = rng.choice(["+", "-", "*", "/", "and", "or", "==", "<", ">="])
            return f"({expr(depth - 1)} {op} {expr(depth - 1)})"
        if kind == 1:
            return f"(not {expr(depth - 1)})"
        if kind == 2:
            return f"(-{expr(depth - 1)})"
        if kind == 3:
            return f"abs({expr(depth - 1)})"
        if kind == 4:
            name = rng.choice(names)
            return f"{name}.offset(by: -{rng.randrange(1, 5)}, or: {expr(depth - 1)})"
        if kind == 5:
            name = rng.choice(names)
            return f"{name}.hold(or: {expr(depth - 1)})"
        if kind == 6:
            name = rng.choice(names)
            dur = rng.choice(["500ms", "1s", "5s", "1min"])
            func = rng.choice(["avg", "sum", "count", "min", "max"])
            return (
                f"{name}.aggregate(over: {dur}, using: {func}, "
                f"or: {expr(depth - 1)})"
            )
        return f"cast<{rng.choice(_TYPES[:4])}>({expr(depth - 1)})"

    for i in range(n_inputs, n_inputs + n_outputs):
        pacing = rng.choice(["", " @true", " @1s", " @200ms", " @2Hz"])
        if rng.random() < 0.2:
            spawn = f" spawn when {expr(1)}"
            close = f" close when {expr(1)}" if rng.random() < 0.7 else ""
        else:
            spawn = close = ""
        if rng.random() < 0.3:
            body = f" eval when {expr(1)} with {expr(2)}"
        else:
            body = f" := {expr(2)}"
        lines.append(f"output {names[i]}{pacing}{spawn}{close}{body}")
    for _ in range(n_triggers):
        msg = rng.choice(['', ' "violation message"'])
        lines.append(f"trigger {expr(2)}{msg}")
    return "\n".join(lines) + "\n"
