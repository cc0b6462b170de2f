"""Static analysis: typing, pacing inference, layering, memory bounds.

``analyze`` turns a parsed AST into a :class:`TypedSpecification` or raises
:class:`AnalysisFailure` carrying one error per offending declaration.
Analysis is deterministic: the same AST yields the same result or the same
diagnostics on every run.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .ast_nodes import (
    Binary,
    Call,
    Cast,
    ConstantDecl,
    Declaration,
    Expression,
    Hold,
    InputDecl,
    Literal,
    Offset,
    OutputDecl,
    SpecificationAst,
    StreamRef,
    TriggerDecl,
    Unary,
    WindowAggregate,
)
from .errors import AnalysisFailure
from .pretty import print_expression
from .values import (
    INT_RANGES,
    NUMERIC_TYPES,
    ValueType,
    format_duration,
)


class AnalysisErrorKind(enum.Enum):
    TYPE_MISMATCH = "type mismatch"
    PACING_MISMATCH = "pacing mismatch"
    ILL_FORMED_CYCLE = "ill-formed cycle"
    UNKNOWN_STREAM = "unknown stream"
    SPAWN_ACCESS_VIOLATION = "spawn access violation"


@dataclass(frozen=True)
class AnalysisError:
    kind: AnalysisErrorKind
    decl: str
    message: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.decl}: {self.kind.value}: {self.message}"


class PacingKind(enum.Enum):
    EVENT = "event"
    PERIODIC = "periodic"
    ANY = "any"


@dataclass(frozen=True)
class Pacing:
    """When a stream evaluates.

    EVENT carries the conjunction of input-stream names that must all be
    present in one event; PERIODIC carries an exact period in nanoseconds;
    ANY fires on every event.
    """

    kind: PacingKind
    events: frozenset[str] = frozenset()
    period_ns: int = 0

    @staticmethod
    def event(names) -> Pacing:
        return Pacing(PacingKind.EVENT, frozenset(names))

    @staticmethod
    def periodic(period_ns: int) -> Pacing:
        return Pacing(PacingKind.PERIODIC, period_ns=period_ns)

    def __str__(self) -> str:
        if self.kind is PacingKind.PERIODIC:
            return f"@{format_duration(self.period_ns)}"
        if self.kind is PacingKind.ANY:
            return "@true"
        return "event{" + ", ".join(sorted(self.events)) + "}"


ANY_PACING = Pacing(PacingKind.ANY)


class AccessKind(enum.Enum):
    SYNC = "sync"
    OFFSET = "offset"
    HOLD = "hold"
    WINDOW = "window"


@dataclass(frozen=True)
class Access:
    kind: AccessKind
    target: str
    offset: int = 0  # negative for OFFSET accesses
    duration_ns: int = 0  # for WINDOW accesses


class StreamKind(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    TRIGGER = "trigger"


@dataclass(frozen=True)
class WindowStorage:
    """Duration-bounded storage kept for one sliding window."""

    target: str
    owner: str
    duration_ns: int


@dataclass
class StreamInfo:
    index: int
    name: str
    kind: StreamKind
    ty: ValueType
    pacing: Pacing
    layer: int
    memory_bound: int = 1
    has_spawn: bool = False
    has_close: bool = False
    has_eval_when: bool = False
    spawn_pacing: Pacing | None = None
    close_pacing: Pacing | None = None
    accesses: tuple[Access, ...] = ()
    window_storage: tuple[WindowStorage, ...] = ()
    decl: Declaration | None = None
    hidden: bool = False  # synthetic trigger-condition streams

    @property
    def period_ns(self) -> int:
        return self.pacing.period_ns


@dataclass(frozen=True)
class TriggerInfo:
    stream_index: int
    message: str


@dataclass
class TypedSpecification:
    streams: list[StreamInfo]
    triggers: list[TriggerInfo]
    constants: dict[str, tuple[ValueType, object]]
    by_name: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.by_name:
            self.by_name = {s.name: s.index for s in self.streams}

    @property
    def inputs(self) -> list[StreamInfo]:
        return [s for s in self.streams if s.kind is StreamKind.INPUT]

    @property
    def outputs(self) -> list[StreamInfo]:
        return [s for s in self.streams if s.kind is not StreamKind.INPUT]

    def input_schema(self) -> dict[str, ValueType]:
        """Input-stream name -> value type, for the adapter layer."""
        return {s.name: s.ty for s in self.inputs}

    def stream(self, name: str) -> StreamInfo:
        return self.streams[self.by_name[name]]


# ── type inference ───────────────────────────────────────────────


@dataclass(frozen=True)
class _Poly:
    """An uncommitted integer literal (or fold thereof), range-tracked."""

    lo: int
    hi: int


class _TypeErr(Exception):
    def __init__(self, message: str, loc) -> None:
        self.message = message
        self.loc = loc
        super().__init__(message)


class _Unresolved(Exception):
    """Referenced output stream has no inferred type yet."""


def _kind_for(e: _TypeErr) -> AnalysisErrorKind:
    if "unknown stream" in e.message:
        return AnalysisErrorKind.UNKNOWN_STREAM
    return AnalysisErrorKind.TYPE_MISMATCH


_SELF = object()  # sentinel inference result for self-references


def _unify(a, b, loc):
    if a is _SELF:
        return b
    if b is _SELF:
        return a
    if isinstance(a, _Poly) and isinstance(b, _Poly):
        return _Poly(min(a.lo, b.lo), max(a.hi, b.hi))
    if isinstance(a, _Poly):
        a, b = b, a
    if isinstance(b, _Poly):
        if a is ValueType.FLOAT64:
            if max(abs(b.lo), abs(b.hi)) > 2**53:
                raise _TypeErr(
                    "integer literal is not exactly representable as Float64", loc
                )
            return a
        if a in INT_RANGES:
            lo, hi = INT_RANGES[a]
            if b.lo < lo or b.hi > hi:
                raise _TypeErr(f"literal out of range for {a}", loc)
            return a
        raise _TypeErr(f"integer literal cannot have type {a}", loc)
    if a is b:
        return a
    raise _TypeErr(f"incompatible types {a} and {b}", loc)


def _commit(t) -> ValueType:
    if isinstance(t, _Poly):
        lo, hi = INT_RANGES[ValueType.INT64]
        if t.lo < lo or t.hi > hi:
            raise _TypeErr("integer literal out of Int64 range", None)
        return ValueType.INT64
    if t is _SELF:
        raise _TypeErr("cannot infer type from self-reference alone", None)
    return t


def _require_numeric(t, what: str, loc):
    if isinstance(t, _Poly) or t is _SELF or t in NUMERIC_TYPES:
        return
    raise _TypeErr(f"{what} requires a numeric operand, got {t}", loc)


def _promote(t):
    # UInt8 arithmetic widens to UInt64; a cast back re-checks the range.
    return ValueType.UINT64 if t is ValueType.UINT8 else t


class _Typer:
    """Bottom-up type inference over one declaration's expressions."""

    def __init__(
        self,
        analyzer: _Analyzer,
        self_name: str | None,
        allow_unknown: bool = False,
    ) -> None:
        self.an = analyzer
        self.self_name = self_name
        self.allow_unknown = allow_unknown
        self.accesses: list[Access] = []

    def infer(self, expr: Expression):
        t = self._infer(expr)
        try:
            expr.ty = _commit(t)
        except _TypeErr as e:
            raise _TypeErr(e.message, expr.loc)
        return t

    def _stream_type(self, name: str, loc):
        an = self.an
        if name in an.constants:
            return an.constants[name][0], False
        if name in an.input_types:
            return an.input_types[name], True
        if name in an.output_decls:
            if name == self.self_name:
                ty = an.output_types.get(name)
                return (_SELF if ty is None else ty), True
            ty = an.output_types.get(name)
            if ty is None:
                if self.allow_unknown:
                    return _SELF, True
                raise _Unresolved(name)
            return ty, True
        raise _TypeErr(f"unknown stream {name!r}", loc)

    def _target_info(self, name: str, loc) -> ValueType:
        """Type of an offset/hold/window target; must be a real stream."""
        an = self.an
        if name in an.constants:
            raise _TypeErr(f"{name!r} is a constant, not a stream", loc)
        ty, _ = self._stream_type(name, loc)
        return ty

    def _infer(self, expr: Expression):
        if isinstance(expr, Literal):
            v = expr.value
            if isinstance(v, bool):
                expr.ty = ValueType.BOOL
                return ValueType.BOOL
            if isinstance(v, int):
                return _Poly(v, v)
            expr.ty = ValueType.FLOAT64
            return ValueType.FLOAT64

        if isinstance(expr, StreamRef):
            ty, is_stream = self._stream_type(expr.name, expr.loc)
            if is_stream:
                self.accesses.append(Access(AccessKind.SYNC, expr.name))
            if ty is not _SELF:
                expr.ty = ty if not isinstance(ty, _Poly) else None
            return ty

        if isinstance(expr, Unary):
            t = self._infer(expr.operand)
            if expr.op == "not":
                t2 = _unify(t, ValueType.BOOL, expr.loc)
                expr.operand.ty = ValueType.BOOL
                expr.ty = ValueType.BOOL
                return ValueType.BOOL
            if isinstance(t, _Poly):
                res = _Poly(-t.hi, -t.lo)
            else:
                _require_numeric(t, "negation", expr.loc)
                if t in (ValueType.UINT64, ValueType.UINT8):
                    raise _TypeErr("cannot negate an unsigned value", expr.loc)
                res = t
            self._annotate(expr, res)
            return res

        if isinstance(expr, Binary):
            lt = self._infer(expr.left)
            rt = self._infer(expr.right)
            op = expr.op
            if op in ("and", "or"):
                _unify(lt, ValueType.BOOL, expr.loc)
                _unify(rt, ValueType.BOOL, expr.loc)
                self._annotate_children(expr, ValueType.BOOL)
                expr.ty = ValueType.BOOL
                return ValueType.BOOL
            t = _unify(lt, rt, expr.loc)
            if op in ("==", "!="):
                if not (isinstance(t, _Poly) or t is _SELF or t is ValueType.BOOL
                        or t in NUMERIC_TYPES):
                    raise _TypeErr(f"cannot compare values of type {t}", expr.loc)
                self._annotate_children(expr, t)
                expr.ty = ValueType.BOOL
                return ValueType.BOOL
            if op in ("<", "<=", ">", ">="):
                _require_numeric(t, f"comparison {op!r}", expr.loc)
                self._annotate_children(expr, t)
                expr.ty = ValueType.BOOL
                return ValueType.BOOL
            # arithmetic
            _require_numeric(t, f"operator {op!r}", expr.loc)
            if isinstance(t, _Poly) or t is _SELF:
                res = t if isinstance(t, _Poly) else _SELF
                if isinstance(t, _Poly):
                    # fold range is not tracked through arithmetic; commit now
                    res = ValueType.INT64
                self._annotate_children(expr, res)
                expr.ty = res if isinstance(res, ValueType) else None
                return res
            res = _promote(t)
            self._annotate_children(expr, t)
            expr.ty = res
            return res

        if isinstance(expr, Call):
            return self._infer_call(expr)

        if isinstance(expr, Cast):
            t = self._infer(expr.operand)
            if expr.target not in NUMERIC_TYPES:
                raise _TypeErr("cast target must be numeric", expr.loc)
            if not (isinstance(t, _Poly) or t is _SELF or t is ValueType.BOOL
                    or t in NUMERIC_TYPES):
                raise _TypeErr(f"cannot cast from {t}", expr.loc)
            self._annotate(expr.operand, t)
            expr.ty = expr.target
            return expr.target

        if isinstance(expr, Offset):
            ty = self._target_info(expr.stream, expr.loc)
            self.accesses.append(
                Access(AccessKind.OFFSET, expr.stream, offset=expr.offset)
            )
            dt = self._infer(expr.default)
            res = _unify(ty, dt, expr.loc)
            self._annotate(expr.default, res)
            self._annotate(expr, res)
            return res

        if isinstance(expr, Hold):
            ty = self._target_info(expr.stream, expr.loc)
            self.accesses.append(Access(AccessKind.HOLD, expr.stream))
            dt = self._infer(expr.default)
            res = _unify(ty, dt, expr.loc)
            self._annotate(expr.default, res)
            self._annotate(expr, res)
            return res

        if isinstance(expr, WindowAggregate):
            return self._infer_window(expr)

        raise TypeError(f"unknown expression {type(expr).__name__}")

    def _infer_call(self, expr: Call):
        if expr.func == "time":
            expr.ty = ValueType.FLOAT64
            return ValueType.FLOAT64
        if expr.func == "sqrt":
            t = self._infer(expr.args[0])
            _unify(t, ValueType.FLOAT64, expr.loc)
            self._annotate(expr.args[0], ValueType.FLOAT64)
            expr.ty = ValueType.FLOAT64
            return ValueType.FLOAT64
        if expr.func == "abs":
            t = self._infer(expr.args[0])
            _require_numeric(t, "abs", expr.loc)
            if isinstance(t, _Poly):
                lo = 0 if t.lo <= 0 <= t.hi else min(abs(t.lo), abs(t.hi))
                res = _Poly(lo, max(abs(t.lo), abs(t.hi)))
            else:
                res = t
            self._annotate(expr.args[0], t)
            self._annotate(expr, res)
            return res
        # n-ary avg / min / max
        t = self._infer(expr.args[0])
        for arg in expr.args[1:]:
            t = _unify(t, self._infer(arg), expr.loc)
        _require_numeric(t, expr.func, expr.loc)
        for arg in expr.args:
            self._annotate(arg, t)
        if expr.func == "avg":
            expr.ty = ValueType.FLOAT64
            return ValueType.FLOAT64
        self._annotate(expr, t)
        return t

    def _infer_window(self, expr: WindowAggregate):
        ty = self._target_info(expr.stream, expr.loc)
        self.accesses.append(
            Access(AccessKind.WINDOW, expr.stream, duration_ns=expr.duration_ns)
        )
        func = expr.func
        if func in ("avg", "min", "max") and expr.default is None:
            raise _TypeErr(
                f"{func} over a possibly-empty window needs a default "
                "(add or:/defaults(to:))",
                expr.loc,
            )
        if func == "avg":
            if ty is not ValueType.BOOL and ty not in NUMERIC_TYPES:
                raise _TypeErr(f"cannot average values of type {ty}", expr.loc)
            if expr.default is not None:
                dt = self._infer(expr.default)
                _unify(dt, ValueType.FLOAT64, expr.loc)
                self._annotate(expr.default, ValueType.FLOAT64)
            expr.ty = ValueType.FLOAT64
            return ValueType.FLOAT64
        if func == "count":
            if expr.default is not None:
                dt = self._infer(expr.default)
                _unify(dt, ValueType.UINT64, expr.loc)
                self._annotate(expr.default, ValueType.UINT64)
            expr.ty = ValueType.UINT64
            return ValueType.UINT64
        if ty not in NUMERIC_TYPES:
            raise _TypeErr(f"window {func} requires a numeric stream", expr.loc)
        res = _promote(ty) if func == "sum" else ty
        if expr.default is not None:
            dt = self._infer(expr.default)
            _unify(dt, res, expr.loc)
            self._annotate(expr.default, res)
        expr.ty = res
        return res

    def _annotate(self, expr: Expression, t) -> None:
        if isinstance(t, ValueType):
            expr.ty = t
        elif isinstance(t, _Poly):
            expr.ty = expr.ty or ValueType.INT64
        # _SELF: resolved on the validation pass

    def _annotate_children(self, expr: Binary, t) -> None:
        try:
            concrete = _commit(t)
        except _TypeErr:
            return
        for child in (expr.left, expr.right):
            if child.ty is None:
                child.ty = concrete


# ── pacing ───────────────────────────────────────────────────────


class _PacingErr(Exception):
    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)


def _combine_pacings(deps: list[tuple[str, Pacing]]) -> Pacing | None:
    """Conjunction of dependency pacings; None when nothing constrains it."""
    periodic: list[tuple[str, Pacing]] = [
        d for d in deps if d[1].kind is PacingKind.PERIODIC
    ]
    event = [d for d in deps if d[1].kind is PacingKind.EVENT]
    any_ev = [d for d in deps if d[1].kind is PacingKind.ANY]
    if periodic and (event or any_ev):
        a = periodic[0][0]
        b = (event or any_ev)[0][0]
        raise _PacingErr(
            f"synchronous access mixes periodic ({a}) and event-based ({b}) "
            "streams; use hold(or:) or a window across pacing kinds"
        )
    if periodic:
        p0 = periodic[0][1].period_ns
        for name, p in periodic[1:]:
            if p.period_ns != p0:
                raise _PacingErr(
                    f"conjoined periodic pacings differ: {periodic[0][0]} is "
                    f"@{format_duration(p0)} but {name} is "
                    f"@{format_duration(p.period_ns)}"
                )
        return Pacing.periodic(p0)
    if event:
        names: set[str] = set()
        for _, p in event:
            names |= set(p.events)
        return Pacing.event(names)
    if any_ev:
        return ANY_PACING
    return None


def _check_annotated(annot: Pacing, deps: list[tuple[str, Pacing]]) -> None:
    for name, dep in deps:
        if annot.kind is PacingKind.PERIODIC:
            if dep.kind is not PacingKind.PERIODIC:
                raise _PacingErr(
                    f"periodic stream synchronously accesses {name} "
                    f"({dep}); use hold(or:) or a window"
                )
            if annot.period_ns % dep.period_ns != 0:
                raise _PacingErr(
                    f"period @{format_duration(annot.period_ns)} is not a "
                    f"multiple of {name}'s @{format_duration(dep.period_ns)}"
                )
        else:  # @true
            if dep.kind is PacingKind.PERIODIC:
                raise _PacingErr(
                    f"@true stream synchronously accesses periodic {name}; "
                    "use hold(or:)"
                )
            if dep.kind is PacingKind.EVENT:
                raise _PacingErr(
                    f"@true stream evaluates on every event but {name} only "
                    f"on {dep}; use hold(or:)"
                )


def infer_pacing(
    decl: OutputDecl, context: dict[str, Pacing]
) -> Pacing:
    """Pacing of one output given the pacings of everything it accesses.

    ``context`` must cover every stream the body (and eval-when clause)
    accesses synchronously or by offset, keyed by name.  Raises
    :class:`AnalysisFailure` on inconsistency.
    """
    accesses: list[Access] = []
    for expr in filter(None, (decl.eval_when, decl.body)):
        accesses.extend(_collect_accesses(expr))
    deps = []
    for acc in accesses:
        if acc.kind not in (AccessKind.SYNC, AccessKind.OFFSET):
            continue
        if acc.target == decl.name:
            continue
        if acc.target not in context:
            continue  # constants and unknowns impose nothing
        deps.append((acc.target, context[acc.target]))
    try:
        if decl.pacing is not None:
            annot = (
                ANY_PACING
                if decl.pacing.period_ns is None
                else Pacing.periodic(decl.pacing.period_ns)
            )
            _check_annotated(annot, deps)
            return annot
        combined = _combine_pacings(deps)
        if combined is None:
            raise _PacingErr(
                "no synchronous dependency determines when this stream "
                "evaluates; annotate it with @<period> or @true"
            )
        return combined
    except _PacingErr as e:
        raise AnalysisFailure(
            [
                AnalysisError(
                    AnalysisErrorKind.PACING_MISMATCH,
                    decl.name,
                    e.message,
                    decl.loc.line,
                    decl.loc.column,
                )
            ]
        )


def _collect_accesses(expr: Expression) -> list[Access]:
    out: list[Access] = []

    def walk(e: Expression) -> None:
        if isinstance(e, StreamRef):
            out.append(Access(AccessKind.SYNC, e.name))
        elif isinstance(e, Unary):
            walk(e.operand)
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                walk(a)
        elif isinstance(e, Cast):
            walk(e.operand)
        elif isinstance(e, Offset):
            out.append(Access(AccessKind.OFFSET, e.stream, offset=e.offset))
            walk(e.default)
        elif isinstance(e, Hold):
            out.append(Access(AccessKind.HOLD, e.stream))
            walk(e.default)
        elif isinstance(e, WindowAggregate):
            out.append(
                Access(AccessKind.WINDOW, e.stream, duration_ns=e.duration_ns)
            )
            if e.default is not None:
                walk(e.default)

    walk(expr)
    return out


# ── well-formedness / layers ─────────────────────────────────────


def check_well_formedness(
    edges: dict[str, list[tuple[str, AccessKind]]],
    order: list[str] | None = None,
) -> dict[str, int]:
    """Assign evaluation layers, rejecting cycles not broken by offset/hold.

    ``edges`` maps each stream to the streams it accesses, labeled by access
    kind.  Synchronous and window accesses constrain ordering; offset and
    hold accesses do not (they read past values and are what legal cycles
    must pass through).  Nodes only ever referenced still get a layer.
    Returns name -> layer; layer 0 is reserved for pure sources (no
    same-cycle dependencies of their own).

    Raises :class:`AnalysisFailure` with ILL_FORMED_CYCLE naming the cycle.
    """
    order = order or list(edges)
    deps: dict[str, list[str]] = {}
    for name in order:
        same_cycle = [
            t
            for (t, kind) in edges.get(name, [])
            if kind in (AccessKind.SYNC, AccessKind.WINDOW)
        ]
        deps[name] = same_cycle
        for t, _ in edges.get(name, []):
            deps.setdefault(t, [])

    layers: dict[str, int] = {}
    visiting: list[str] = []

    def visit(name: str) -> int:
        if name in layers:
            return layers[name]
        if name in visiting:
            cycle = visiting[visiting.index(name) :] + [name]
            raise AnalysisFailure(
                [
                    AnalysisError(
                        AnalysisErrorKind.ILL_FORMED_CYCLE,
                        name,
                        "dependency cycle with no offset or hold edge: "
                        + " -> ".join(cycle),
                    )
                ]
            )
        visiting.append(name)
        ds = deps.get(name, [])
        layer = 0 if not ds and not edges.get(name) else (
            1 + max((visit(d) for d in ds), default=0)
        )
        visiting.pop()
        layers[name] = layer
        return layer

    for name in deps:
        visit(name)
    return layers


# ── memory bounds ────────────────────────────────────────────────


@dataclass(frozen=True)
class MemoryBoundRow:
    stream: str
    retained_values: int
    windows: tuple[WindowStorage, ...]

    def describe(self) -> str:
        parts = [f"{self.retained_values} value(s)"]
        for w in self.windows:
            parts.append(
                f"duration-bounded({format_duration(w.duration_ns)}) for {w.owner}"
            )
        return ", ".join(parts)


def memory_bounds(spec: TypedSpecification) -> list[MemoryBoundRow]:
    """Per-stream storage report for an analyzed specification."""
    return [
        MemoryBoundRow(s.name, s.memory_bound, s.window_storage)
        for s in spec.streams
    ]


# ── the analyzer ─────────────────────────────────────────────────


def analyze(ast: SpecificationAst) -> TypedSpecification:
    """Validate and annotate a parsed specification.

    Raises :class:`AnalysisFailure` with one :class:`AnalysisError` per
    rejected declaration (the first problem found in each).
    """
    return _Analyzer(ast).run()


class _Analyzer:
    def __init__(self, ast: SpecificationAst) -> None:
        self.ast = ast
        self.errors: list[AnalysisError] = []
        self.constants: dict[str, tuple[ValueType, object]] = {}
        self.input_types: dict[str, ValueType] = {}
        self.output_decls: dict[str, OutputDecl] = {}
        self.output_types: dict[str, ValueType] = {}
        self.accesses: dict[str, list[Access]] = {}
        self.spawn_accesses: dict[str, list[Access]] = {}
        self.close_accesses: dict[str, list[Access]] = {}
        self.trigger_names: dict[int, str] = {}

    def err(
        self,
        kind: AnalysisErrorKind,
        decl: str,
        message: str,
        loc=None,
    ) -> None:
        line = getattr(loc, "line", 0)
        col = getattr(loc, "column", 0)
        self.errors.append(AnalysisError(kind, decl, message, line, col))

    def run(self) -> TypedSpecification:
        self._collect_symbols()
        self._fold_constants()
        self._check_graph_shape()
        self._resolve_output_types()
        infos = self._validate_and_build()
        if self.errors:
            raise AnalysisFailure(self.errors)
        return infos

    def _check_graph_shape(self) -> None:
        """Cycle legality is purely structural; check it before typing so a
        synchronous cycle reports ILL_FORMED_CYCLE, not a type error."""
        known = set(self.input_types) | set(self.output_decls)
        edges: dict[str, list[tuple[str, AccessKind]]] = {
            name: [] for name in self.input_types
        }
        order = list(self.input_types)
        for decl in self.ast.decls:
            if not isinstance(decl, OutputDecl):
                continue
            accs: list[Access] = []
            for expr in filter(None, (decl.eval_when, decl.body)):
                accs.extend(_collect_accesses(expr))
            order.append(decl.name)
            edges[decl.name] = [
                (a.target, a.kind)
                for a in accs
                if a.target in known
                and (a.target != decl.name or a.kind is not AccessKind.OFFSET)
            ]
        try:
            check_well_formedness(edges, order)
        except AnalysisFailure as e:
            self.errors.extend(e.errors)
            raise AnalysisFailure(self.errors)

    # symbol collection -------------------------------------------------

    def _collect_symbols(self) -> None:
        for decl in self.ast.decls:
            if isinstance(decl, InputDecl):
                self.input_types[decl.name] = decl.ty
            elif isinstance(decl, OutputDecl):
                self.output_decls[decl.name] = decl

    def _fold_constants(self) -> None:
        for decl in self.ast.decls:
            if not isinstance(decl, ConstantDecl):
                continue
            try:
                value = self._fold_const_expr(decl.value)
            except _TypeErr as e:
                self.err(AnalysisErrorKind.TYPE_MISMATCH, decl.name, e.message, e.loc)
                continue
            ty = decl.ty
            if ty is ValueType.FLOAT64:
                if isinstance(value, bool):
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH,
                        decl.name,
                        "boolean constant declared as Float64",
                        decl.loc,
                    )
                    continue
                value = float(value)
            elif ty is ValueType.BOOL:
                if not isinstance(value, bool):
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH,
                        decl.name,
                        "numeric constant declared as Bool",
                        decl.loc,
                    )
                    continue
            else:
                if isinstance(value, bool) or not isinstance(value, int):
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH,
                        decl.name,
                        f"constant value {value!r} is not an integer",
                        decl.loc,
                    )
                    continue
                lo, hi = INT_RANGES[ty]
                if not lo <= value <= hi:
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH,
                        decl.name,
                        f"constant value {value} out of range for {ty}",
                        decl.loc,
                    )
                    continue
            self.constants[decl.name] = (ty, value)

    def _fold_const_expr(self, expr: Expression):
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, StreamRef):
            if expr.name in self.constants:
                return self.constants[expr.name][1]
            raise _TypeErr(
                f"constant initializer may only reference earlier constants, "
                f"not {expr.name!r}",
                expr.loc,
            )
        if isinstance(expr, Unary):
            v = self._fold_const_expr(expr.operand)
            if expr.op == "-":
                if isinstance(v, bool):
                    raise _TypeErr("cannot negate a boolean", expr.loc)
                return -v
            if not isinstance(v, bool):
                raise _TypeErr("'not' needs a boolean", expr.loc)
            return not v
        if isinstance(expr, Binary) and expr.op in ("+", "-", "*", "/"):
            left = self._fold_const_expr(expr.left)
            right = self._fold_const_expr(expr.right)
            if isinstance(left, bool) or isinstance(right, bool):
                raise _TypeErr("arithmetic on booleans", expr.loc)
            op = expr.op
            if op == "+":
                return left + right
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if right == 0:
                raise _TypeErr("constant division by zero", expr.loc)
            if isinstance(left, int) and isinstance(right, int):
                q = abs(left) // abs(right)
                return q if (left >= 0) == (right >= 0) else -q
            return left / right
        raise _TypeErr("constant initializer is not a constant expression", expr.loc)

    # output type resolution --------------------------------------------

    def _resolve_output_types(self) -> None:
        pending = [
            d for d in self.ast.decls
            if isinstance(d, OutputDecl) and d.name not in self.output_types
        ]
        while pending:
            progressed = False
            still: list[OutputDecl] = []
            for decl in pending:
                typer = _Typer(self, decl.name)
                try:
                    t = typer.infer(decl.body)
                except _Unresolved:
                    still.append(decl)
                    continue
                except _TypeErr as e:
                    self.err(_kind_for(e), decl.name, e.message, e.loc)
                    # park a type so dependents fail with their own message
                    self.output_types[decl.name] = ValueType.INT64
                    progressed = True
                    continue
                if t is _SELF:
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH,
                        decl.name,
                        "type cannot be inferred from a pure self-reference",
                        decl.loc,
                    )
                    self.output_types[decl.name] = ValueType.INT64
                    progressed = True
                    continue
                try:
                    self.output_types[decl.name] = _commit(t)
                except _TypeErr as e:
                    self.err(
                        AnalysisErrorKind.TYPE_MISMATCH, decl.name, e.message, decl.loc
                    )
                    self.output_types[decl.name] = ValueType.INT64
                progressed = True
            if not progressed:
                # mutual hold/offset cycles: infer what we can by treating
                # unresolved references as wildcards; the validation pass
                # re-checks everything strictly once all types are known
                for decl in still:
                    typer = _Typer(self, decl.name, allow_unknown=True)
                    try:
                        t = typer.infer(decl.body)
                    except (_Unresolved, _TypeErr):
                        t = _SELF
                    if t is _SELF:
                        self.err(
                            AnalysisErrorKind.TYPE_MISMATCH,
                            decl.name,
                            "type depends cyclically on other streams and "
                            "cannot be inferred",
                            decl.loc,
                        )
                        self.output_types[decl.name] = ValueType.INT64
                    else:
                        try:
                            self.output_types[decl.name] = _commit(t)
                        except _TypeErr:
                            self.output_types[decl.name] = ValueType.INT64
                pending = [
                    d for d in still if d.name not in self.output_types
                ]
                continue
            pending = still

    # validation & assembly ---------------------------------------------

    def _validate_and_build(self) -> TypedSpecification:
        spawned = {
            n for n, d in self.output_decls.items() if d.spawn is not None
        }
        filtered = {
            n for n, d in self.output_decls.items() if d.eval_when is not None
        }
        failed: set[str] = {e.decl for e in self.errors}

        # validation pass: full typing plus expression-level access rules
        for decl in self.ast.decls:
            if isinstance(decl, OutputDecl):
                if decl.name in failed:
                    continue
                self._validate_output(decl, spawned, filtered)
            elif isinstance(decl, TriggerDecl):
                self._validate_trigger(decl, spawned, filtered)

        if self.errors:
            raise AnalysisFailure(self.errors)

        # layering over sync + window edges
        edges: dict[str, list[tuple[str, AccessKind]]] = {}
        order: list[str] = list(self.input_types)
        for name in self.input_types:
            edges[name] = []
        for decl in self.ast.decls:
            if isinstance(decl, OutputDecl):
                order.append(decl.name)
                edges[decl.name] = [
                    (a.target, a.kind)
                    for a in self.accesses[decl.name]
                    if a.target != decl.name or a.kind is not AccessKind.OFFSET
                ]
        for idx, name in self.trigger_names.items():
            order.append(name)
            edges[name] = [(a.target, a.kind) for a in self.accesses[name]]
        layers = check_well_formedness(edges, order)

        # pacing fixpoint
        pacings = self._infer_all_pacings()

        # memory bounds: widest offset against each stream, plus windows
        bounds: dict[str, int] = {name: 1 for name in edges}
        storage: dict[str, list[WindowStorage]] = {name: [] for name in edges}
        for owner, accs in self.accesses.items():
            for a in accs:
                if a.kind is AccessKind.OFFSET:
                    bounds[a.target] = max(bounds[a.target], 1 - a.offset)
                elif a.kind is AccessKind.WINDOW:
                    storage[a.target].append(
                        WindowStorage(a.target, owner, a.duration_ns)
                    )

        infos: list[StreamInfo] = []
        by_name: dict[str, int] = {}

        def add(info: StreamInfo) -> None:
            by_name[info.name] = info.index
            infos.append(info)

        for decl in self.ast.decls:
            if isinstance(decl, InputDecl):
                add(
                    StreamInfo(
                        index=len(infos),
                        name=decl.name,
                        kind=StreamKind.INPUT,
                        ty=decl.ty,
                        pacing=Pacing.event({decl.name}),
                        layer=layers[decl.name],
                        memory_bound=bounds[decl.name],
                        window_storage=tuple(storage[decl.name]),
                        decl=decl,
                    )
                )
            elif isinstance(decl, OutputDecl):
                add(
                    StreamInfo(
                        index=len(infos),
                        name=decl.name,
                        kind=StreamKind.OUTPUT,
                        ty=self.output_types[decl.name],
                        pacing=pacings[decl.name],
                        layer=layers[decl.name],
                        memory_bound=bounds[decl.name],
                        has_spawn=decl.spawn is not None,
                        has_close=decl.close is not None,
                        has_eval_when=decl.eval_when is not None,
                        spawn_pacing=pacings.get(f"{decl.name}#spawn"),
                        close_pacing=pacings.get(f"{decl.name}#close"),
                        accesses=tuple(self.accesses[decl.name]),
                        window_storage=tuple(storage[decl.name]),
                        decl=decl,
                    )
                )

        triggers: list[TriggerInfo] = []
        for t_idx, decl in enumerate(
            d for d in self.ast.decls if isinstance(d, TriggerDecl)
        ):
            name = self.trigger_names[t_idx]
            message = (
                decl.message
                if decl.message is not None
                else print_expression(decl.condition)
            )
            add(
                StreamInfo(
                    index=len(infos),
                    name=name,
                    kind=StreamKind.TRIGGER,
                    ty=ValueType.BOOL,
                    pacing=pacings[name],
                    layer=layers[name],
                    memory_bound=bounds.get(name, 1),
                    accesses=tuple(self.accesses[name]),
                    decl=decl,
                    hidden=True,
                )
            )
            triggers.append(TriggerInfo(stream_index=len(infos) - 1, message=message))

        return TypedSpecification(
            streams=infos, triggers=triggers, constants=dict(self.constants)
        )

    def _validate_output(
        self, decl: OutputDecl, spawned: set[str], filtered: set[str]
    ) -> None:
        typer = _Typer(self, decl.name)
        try:
            if decl.eval_when is not None:
                t = typer.infer(decl.eval_when)
                _unify(t, ValueType.BOOL, decl.eval_when.loc)
                decl.eval_when.ty = ValueType.BOOL
            t = typer.infer(decl.body)
            _unify(t, self.output_types[decl.name], decl.body.loc)
        except _Unresolved as e:
            self.err(
                AnalysisErrorKind.UNKNOWN_STREAM,
                decl.name,
                f"reference to stream {e.args[0]!r} whose type never resolved",
                decl.loc,
            )
            return
        except _TypeErr as e:
            self.err(_kind_for(e), decl.name, e.message, e.loc)
            return

        self.accesses[decl.name] = typer.accesses
        if not self._check_access_rules(decl.name, typer.accesses, spawned, filtered):
            return

        # spawn/close conditions: boolean, and synchronous over inputs only
        for label, cond in (("spawn", decl.spawn), ("close", decl.close)):
            if cond is None:
                continue
            ctyper = _Typer(self, None)
            try:
                t = ctyper.infer(cond)
                _unify(t, ValueType.BOOL, cond.loc)
                cond.ty = ValueType.BOOL
            except _Unresolved:
                self.err(
                    AnalysisErrorKind.UNKNOWN_STREAM,
                    decl.name,
                    f"{label} condition references an unresolved stream",
                    cond.loc,
                )
                return
            except _TypeErr as e:
                self.err(_kind_for(e), decl.name, f"{label} condition: {e.message}", e.loc)
                return
            for acc in ctyper.accesses:
                if acc.kind in (AccessKind.SYNC, AccessKind.OFFSET):
                    if acc.target not in self.input_types:
                        self.err(
                            AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
                            decl.name,
                            f"{label} condition may only access input streams "
                            f"synchronously; {acc.target!r} is an output "
                            "(transitions run before any stream evaluates)",
                            cond.loc,
                        )
                        return
            self.accesses[f"{decl.name}#{label}"] = ctyper.accesses

        if decl.spawn is None and decl.close is not None:
            self.err(
                AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
                decl.name,
                "close clause without a spawn clause",
                decl.loc,
            )

    def _validate_trigger(
        self, decl: TriggerDecl, spawned: set[str], filtered: set[str]
    ) -> None:
        t_idx = len(self.trigger_names)
        name = f"trigger#{t_idx}"
        self.trigger_names[t_idx] = name
        typer = _Typer(self, None)
        try:
            t = typer.infer(decl.condition)
            _unify(t, ValueType.BOOL, decl.condition.loc)
            decl.condition.ty = ValueType.BOOL
        except _Unresolved:
            self.err(
                AnalysisErrorKind.UNKNOWN_STREAM,
                name,
                "condition references an unresolved stream",
                decl.loc,
            )
            return
        except _TypeErr as e:
            self.err(_kind_for(e), name, e.message, e.loc)
            return
        self.accesses[name] = typer.accesses
        self._check_access_rules(name, typer.accesses, spawned, filtered)

    def _check_access_rules(
        self,
        owner: str,
        accesses: list[Access],
        spawned: set[str],
        filtered: set[str],
    ) -> bool:
        for acc in accesses:
            if acc.target in spawned and acc.kind is not AccessKind.HOLD:
                if acc.target == owner:
                    continue  # a spawned stream may use its own history
                self.err(
                    AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
                    owner,
                    f"stream {acc.target!r} has spawn/close clauses and may "
                    "only be accessed via hold(or:)",
                )
                return False
            if (
                acc.target in filtered
                and acc.kind is AccessKind.SYNC
                and acc.target != owner
            ):
                self.err(
                    AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
                    owner,
                    f"stream {acc.target!r} has an eval-when filter; "
                    "synchronous access is undefined when the filter skips a "
                    "cycle (use hold, offset, or a window)",
                )
                return False
        return True

    def _infer_all_pacings(self) -> dict[str, Pacing]:
        pacings: dict[str, Pacing] = {
            name: Pacing.event({name}) for name in self.input_types
        }
        annotated: dict[str, Pacing] = {}
        for name, decl in self.output_decls.items():
            if decl.pacing is not None:
                annotated[name] = (
                    ANY_PACING
                    if decl.pacing.period_ns is None
                    else Pacing.periodic(decl.pacing.period_ns)
                )

        def pacing_deps(owner: str) -> list[tuple[str, Pacing]] | None:
            deps: list[tuple[str, Pacing]] = []
            for acc in self.accesses.get(owner, []):
                if acc.kind not in (AccessKind.SYNC, AccessKind.OFFSET):
                    continue
                base = owner.split("#", 1)[0]
                if acc.target == base:
                    continue
                if acc.target in self.constants:
                    continue
                if acc.target not in pacings:
                    return None  # not resolved yet
                deps.append((acc.target, pacings[acc.target]))
            return deps

        unresolved = [
            d.name for d in self.ast.decls if isinstance(d, OutputDecl)
        ] + list(self.trigger_names.values())

        while unresolved:
            progressed = False
            still: list[str] = []
            for name in unresolved:
                deps = pacing_deps(name)
                if deps is None:
                    still.append(name)
                    continue
                decl = self.output_decls.get(name)
                loc = decl.loc if decl is not None else None
                try:
                    if name in annotated:
                        _check_annotated(annotated[name], deps)
                        pacings[name] = annotated[name]
                    else:
                        combined = _combine_pacings(deps)
                        if combined is None:
                            raise _PacingErr(
                                "no synchronous dependency determines when "
                                "this stream evaluates; annotate it with "
                                "@<period> or @true"
                            )
                        pacings[name] = combined
                except _PacingErr as e:
                    self.err(
                        AnalysisErrorKind.PACING_MISMATCH, name, e.message, loc
                    )
                    pacings[name] = ANY_PACING  # park to keep going
                progressed = True
            if not progressed:
                for name in still:
                    self.err(
                        AnalysisErrorKind.PACING_MISMATCH,
                        name,
                        "pacing depends cyclically on unannotated streams; "
                        "annotate one of them",
                    )
                    pacings[name] = ANY_PACING
                break
            unresolved = still

        # spawned periodic streams keep their own deadline grid; synchronous
        # access to other periodic streams would read unaligned instants
        for name, decl in self.output_decls.items():
            if decl.spawn is None or pacings[name].kind is not PacingKind.PERIODIC:
                continue
            deps = pacing_deps(name) or []
            for dep_name, dep in deps:
                if dep.kind is PacingKind.PERIODIC:
                    self.err(
                        AnalysisErrorKind.PACING_MISMATCH,
                        name,
                        f"spawned periodic stream synchronously accesses "
                        f"{dep_name}; deadlines are not aligned — use hold(or:)",
                        decl.loc,
                    )

        # spawn/close condition pacings
        for name, decl in self.output_decls.items():
            for label in ("spawn", "close"):
                key = f"{name}#{label}"
                if key not in self.accesses:
                    continue
                deps = pacing_deps(key)
                try:
                    combined = _combine_pacings(deps or [])
                    if combined is None:
                        raise _PacingErr(
                            f"{label} condition accesses no input stream "
                            "synchronously, so it could never be checked"
                        )
                    pacings[key] = combined
                except _PacingErr as e:
                    self.err(
                        AnalysisErrorKind.PACING_MISMATCH, name, e.message, decl.loc
                    )
        return pacings
