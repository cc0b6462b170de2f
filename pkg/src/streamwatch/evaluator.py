"""Expression compilation: typed AST nodes become argument-free closures.

Each stream body compiles once, at monitor construction, into a tree of
small closures bound directly to the monitor's ring buffers and window
stores.  Comparisons and divisions specialize on the inferred operand
type so the hot path carries no dispatch.
"""

from __future__ import annotations

import math
import operator
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .analysis import StreamKind, TypedSpecification
from .ast_nodes import (
    Binary,
    Call,
    Cast,
    Expression,
    Hold,
    Literal,
    Offset,
    StreamRef,
    Unary,
    WindowAggregate,
)
from .values import INT_RANGES, NS_PER_SEC, Value, ValueType

EvalFn = Callable[[], Value]


@dataclass
class WindowState:
    """One sliding window: the retained (timestamp, value) pairs plus its
    aggregate configuration."""

    target: int
    duration_ns: int
    func: str
    value_type: ValueType
    default_fn: EvalFn | None
    store: deque = field(default_factory=deque)


class Runtime:
    """The mutable state closures read from; owned by the Monitor."""

    __slots__ = (
        "buffers",
        "stamps",
        "alive",
        "serial",
        "now_ns",
        "nan_compare",
        "warnings",
        "windows",
        "windows_by_target",
    )

    def __init__(self, n_streams: int) -> None:
        self.buffers: list[deque] = [deque(maxlen=1) for _ in range(n_streams)]
        self.stamps: list[int] = [0] * n_streams
        self.alive: list[bool | None] = [None] * n_streams
        self.serial = 0
        self.now_ns = 0
        self.nan_compare = False
        self.warnings: list[str] = []
        self.windows: list[WindowState] = []
        self.windows_by_target: dict[int, list[WindowState]] = {}

    def warn(self, message: str) -> None:
        self.warnings.append(message)


# ── window aggregation ───────────────────────────────────────────


def aggregate_values(values, func: str, value_type: ValueType) -> Value:
    """Aggregate a non-empty value sequence in chronological order.

    Summation is plain left-to-right so an independent recomputation over
    the same list is bit-identical.
    """
    if func == "count":
        return len(values)
    if func == "avg":
        total = 0.0
        n = 0
        for v in values:
            total += v
            n += 1
        return total / n
    if func == "sum":
        if value_type is ValueType.FLOAT64:
            total = 0.0
        else:
            total = 0
        for v in values:
            total += v
        return total
    # min / max
    if value_type is ValueType.FLOAT64:
        for v in values:
            if v != v:  # NaN poisons the aggregate rather than vanishing
                return math.nan
    return min(values) if func == "min" else max(values)


def _zero_for(func: str, value_type: ValueType) -> Value:
    if func == "count":
        return 0
    return 0.0 if value_type is ValueType.FLOAT64 else 0


def evaluate_window(
    store,
    func: str,
    now_ns: int,
    duration_ns: int,
    default: Value | None,
    value_type: ValueType,
) -> Value:
    """Pure window read: retain (now-d, now], aggregate, or default.

    ``store`` is an iterable of (timestamp_ns, value) pairs in time order.
    sum/count of an empty window are zero; avg/min/max fall back to
    ``default`` (statically guaranteed present for those functions).
    """
    cut = now_ns - duration_ns
    values = [v for (ts, v) in store if cut < ts <= now_ns]
    if not values:
        if default is not None:
            return default
        return _zero_for(func, value_type)
    return aggregate_values(values, func, value_type)


def offset_access(
    buffer, n: int, default: Value, wrote_this_cycle: bool = False
) -> Value:
    """Value ``|n|`` evaluations before the current cycle, else default.

    When the target already produced this cycle's value, that value sits at
    the end of the buffer and is skipped; otherwise the buffer's last entry
    is already one evaluation old.
    """
    back = -n + (1 if wrote_this_cycle else 0)
    if len(buffer) >= back:
        return buffer[-back]
    return default


# ── compilation ──────────────────────────────────────────────────


def _int_div(a: int, b: int, rt: Runtime) -> int:
    # C-style truncation; division by zero is made visible, not fatal
    if b == 0:
        rt.warn("integer division by zero")
        return 0
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _float_div(a: float, b: float) -> float:
    # IEEE semantics without ZeroDivisionError
    if b != 0.0:
        return a / b
    if a != a or a == 0.0:
        return math.nan
    return math.copysign(math.inf, a) * math.copysign(1.0, b)


class Compiler:
    """Compiles expressions for one analyzed specification."""

    def __init__(self, spec: TypedSpecification, rt: Runtime) -> None:
        self.spec = spec
        self.rt = rt

    def compile(self, expr: Expression) -> EvalFn:
        rt = self.rt

        if isinstance(expr, Literal):
            v: Value = expr.value
            if expr.ty is ValueType.FLOAT64 and isinstance(v, int) and not isinstance(v, bool):
                v = float(v)
            return lambda: v

        if isinstance(expr, StreamRef):
            name = expr.name
            if name in self.spec.constants:
                cv = self.spec.constants[name][1]
                return lambda: cv
            info = self.spec.stream(name)
            idx = info.index
            buf = rt.buffers[idx]
            stamps = rt.stamps

            def sync_read() -> Value:
                # layer safety: the value must have been written this cycle
                assert stamps[idx] == rt.serial, (
                    f"synchronous read of {name!r} before it evaluated"
                )
                return buf[-1]

            return sync_read

        if isinstance(expr, Unary):
            f = self.compile(expr.operand)
            if expr.op == "not":
                return lambda: not f()
            if expr.ty is ValueType.FLOAT64:
                return lambda: float(-f())
            return lambda: -f()

        if isinstance(expr, Binary):
            return self._compile_binary(expr)

        if isinstance(expr, Call):
            return self._compile_call(expr)

        if isinstance(expr, Cast):
            return self._compile_cast(expr)

        if isinstance(expr, Offset):
            info = self.spec.stream(expr.stream)
            idx = info.index
            buf = rt.buffers[idx]
            stamps = rt.stamps
            k = -expr.offset
            default_fn = self.compile(expr.default)

            def offset_read() -> Value:
                back = k + (1 if stamps[idx] == rt.serial else 0)
                if len(buf) >= back:
                    return buf[-back]
                return default_fn()

            return offset_read

        if isinstance(expr, Hold):
            info = self.spec.stream(expr.stream)
            idx = info.index
            buf = rt.buffers[idx]
            default_fn = self.compile(expr.default)
            if info.has_spawn:
                alive = rt.alive

                def hold_spawned() -> Value:
                    if not alive[idx]:
                        return default_fn()
                    return buf[-1] if buf else default_fn()

                return hold_spawned

            def hold_read() -> Value:
                return buf[-1] if buf else default_fn()

            return hold_read

        if isinstance(expr, WindowAggregate):
            return self._compile_window(expr)

        raise TypeError(f"unknown expression {type(expr).__name__}")

    def _compile_binary(self, expr: Binary) -> EvalFn:
        rt = self.rt
        op = expr.op
        lf = self.compile(expr.left)
        rf = self.compile(expr.right)

        if op == "and":
            return lambda: lf() and rf()
        if op == "or":
            return lambda: lf() or rf()

        operand_ty = expr.left.ty
        is_float = operand_ty is ValueType.FLOAT64

        if op in ("==", "!=", "<", "<=", ">", ">="):
            raw = {
                "==": operator.eq,
                "!=": operator.ne,
                "<": operator.lt,
                "<=": operator.le,
                ">": operator.gt,
                ">=": operator.ge,
            }[op]
            if is_float:
                # NaN makes every comparison false and flags the cycle
                def cmp_float() -> bool:
                    a = lf()
                    b = rf()
                    if a != a or b != b:
                        rt.nan_compare = True
                        return False
                    return raw(a, b)

                return cmp_float
            return lambda: raw(lf(), rf())

        # arithmetic
        if op == "+":
            return lambda: lf() + rf()
        if op == "-":
            return lambda: lf() - rf()
        if op == "*":
            return lambda: lf() * rf()
        if is_float:
            return lambda: _float_div(lf(), rf())
        return lambda: _int_div(lf(), rf(), rt)

    def _compile_call(self, expr: Call) -> EvalFn:
        rt = self.rt
        func = expr.func
        if func == "time":
            return lambda: rt.now_ns / NS_PER_SEC
        fns = [self.compile(a) for a in expr.args]
        if func == "abs":
            f = fns[0]
            return lambda: abs(f())
        if func == "sqrt":
            f = fns[0]

            def sqrt_fn() -> float:
                v = f()
                if v != v or v < 0.0:
                    return math.nan
                return math.sqrt(v)

            return sqrt_fn
        if func == "avg":
            n = len(fns)

            def avg_fn() -> float:
                total = 0.0
                for f in fns:
                    total += f()
                return total / n

            return avg_fn
        # n-ary min / max
        pick = min if func == "min" else max
        if expr.ty is ValueType.FLOAT64:

            def pick_float() -> float:
                vals = [f() for f in fns]
                for v in vals:
                    if v != v:
                        return math.nan
                return pick(vals)

            return pick_float
        return lambda: pick(f() for f in fns)

    def _compile_cast(self, expr: Cast) -> EvalFn:
        rt = self.rt
        f = self.compile(expr.operand)
        target = expr.target
        if target is ValueType.FLOAT64:
            return lambda: float(f())
        lo, hi = INT_RANGES[target]

        def cast_int() -> int:
            v = f()
            if isinstance(v, float):
                if v != v:
                    rt.warn(f"cast of NaN to {target}")
                    return 0
                if v >= hi:
                    if v > hi:
                        rt.warn(f"cast overflow: {v!r} clamped to {target}")
                    return hi
                if v <= lo:
                    if v < lo:
                        rt.warn(f"cast overflow: {v!r} clamped to {target}")
                    return lo
                return int(v)  # truncation toward zero
            v = int(v)  # bools become 0/1
            if v < lo:
                rt.warn(f"cast overflow: {v} clamped to {target}")
                return lo
            if v > hi:
                rt.warn(f"cast overflow: {v} clamped to {target}")
                return hi
            return v

        return cast_int

    def _compile_window(self, expr: WindowAggregate) -> EvalFn:
        rt = self.rt
        info = self.spec.stream(expr.stream)
        default_fn = self.compile(expr.default) if expr.default is not None else None
        w = WindowState(
            target=info.index,
            duration_ns=expr.duration_ns,
            func=expr.func,
            value_type=info.ty,
            default_fn=default_fn,
        )
        rt.windows.append(w)
        rt.windows_by_target.setdefault(info.index, []).append(w)

        store = w.store
        duration = expr.duration_ns
        func = expr.func
        vty = info.ty
        empty_zero: Value | None = (
            None if func in ("avg", "min", "max") else _zero_for(func, vty)
        )

        def window_read() -> Value:
            cut = rt.now_ns - duration
            while store and store[0][0] <= cut:
                store.popleft()
            if not store:
                return default_fn() if default_fn is not None else empty_zero
            return aggregate_values([v for (_, v) in store], func, vty)

        return window_read
