"""AST for the monitoring specification language.

Node equality ignores source locations and inferred types, so two parses
of equivalent text compare equal (the pretty-print round-trip contract).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .values import ValueType


@dataclass(frozen=True)
class SourceLoc:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NOWHERE = SourceLoc(0, 0)


def _loc_field() -> SourceLoc:
    return NOWHERE


# ── Expressions ──────────────────────────────────────────────────


@dataclass(eq=False)
class Expression:
    """Base expression node.

    ``ty`` is filled in by static analysis; it never participates in
    equality or hashing.
    """

    loc: SourceLoc = field(default_factory=_loc_field, compare=False, repr=False)
    ty: ValueType | None = field(default=None, compare=False, repr=False)

    def __eq__(self, other) -> bool:  # structural, location-blind
        if type(self) is not type(other):
            return NotImplemented
        for name in self.__dataclass_fields__:
            if name in ("loc", "ty"):
                continue
            if getattr(self, name) != getattr(other, name):
                return False
        return True

    __hash__ = None


@dataclass(eq=False)
class Literal(Expression):
    """Int, float, or bool constant.

    Integer literals are polymorphic until analysis commits them to a
    concrete numeric type.
    """

    value: bool | int | float = 0


@dataclass(eq=False)
class StreamRef(Expression):
    """Reference to a stream or declared constant by name (synchronous)."""

    name: str = ""


@dataclass(eq=False)
class Unary(Expression):
    op: str = ""  # "-" | "not"
    operand: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class Binary(Expression):
    op: str = ""  # + - * / == != < <= > >= and or
    left: Expression = None  # type: ignore[assignment]
    right: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class Call(Expression):
    """Built-in function application: abs, sqrt, avg, min, max, time."""

    func: str = ""
    args: list[Expression] = field(default_factory=list)


@dataclass(eq=False)
class Cast(Expression):
    target: ValueType = ValueType.INT64
    operand: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class Offset(Expression):
    """``s.offset(by: -n, or: d)`` — value n evaluations back, else default."""

    stream: str = ""
    offset: int = -1  # strictly negative
    default: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class Hold(Expression):
    """``s.hold(or: d)`` — most recent value without pacing synchronization."""

    stream: str = ""
    default: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class WindowAggregate(Expression):
    """``s.aggregate(over: D, using: f)`` with optional empty-window default.

    The inline ``or:`` argument and a ``.defaults(to:)`` suffix both land
    here; they are one construct with two surface spellings.
    """

    stream: str = ""
    duration_ns: int = 0
    func: str = ""  # avg | sum | count | min | max
    default: Expression | None = None


# ── Pacing annotations ───────────────────────────────────────────


@dataclass(frozen=True)
class PacingAnnotation:
    """``@<duration>``, ``@<n>Hz`` (normalized to a period), or ``@true``.

    ``period_ns`` is None for ``@true``.
    """

    period_ns: int | None


ANY_EVENT = PacingAnnotation(None)


# ── Declarations ─────────────────────────────────────────────────


@dataclass(eq=False)
class Declaration:
    loc: SourceLoc = field(default_factory=_loc_field, compare=False, repr=False)

    def __eq__(self, other) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        for name in self.__dataclass_fields__:
            if name == "loc":
                continue
            if getattr(self, name) != getattr(other, name):
                return False
        return True

    __hash__ = None


@dataclass(eq=False)
class InputDecl(Declaration):
    name: str = ""
    ty: ValueType = ValueType.FLOAT64


@dataclass(eq=False)
class ConstantDecl(Declaration):
    """Named constant: ``constant eps: Float64 := 0.5``."""

    name: str = ""
    ty: ValueType = ValueType.FLOAT64
    value: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class OutputDecl(Declaration):
    name: str = ""
    pacing: PacingAnnotation | None = None
    spawn: Expression | None = None
    close: Expression | None = None
    eval_when: Expression | None = None
    body: Expression = None  # type: ignore[assignment]


@dataclass(eq=False)
class TriggerDecl(Declaration):
    condition: Expression = None  # type: ignore[assignment]
    message: str | None = None


@dataclass(eq=False)
class SpecificationAst(Declaration):
    """A parsed specification: declarations in source order."""

    decls: list[Declaration] = field(default_factory=list)

    @property
    def inputs(self) -> list[InputDecl]:
        return [d for d in self.decls if isinstance(d, InputDecl)]

    @property
    def constants(self) -> list[ConstantDecl]:
        return [d for d in self.decls if isinstance(d, ConstantDecl)]

    @property
    def outputs(self) -> list[OutputDecl]:
        return [d for d in self.decls if isinstance(d, OutputDecl)]

    @property
    def triggers(self) -> list[TriggerDecl]:
        return [d for d in self.decls if isinstance(d, TriggerDecl)]
