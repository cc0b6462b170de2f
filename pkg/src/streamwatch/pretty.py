"""Canonical text rendering of specification ASTs.

Output always re-parses to a structurally equal AST.  The printer
normalizes surface variation: ASCII connectives, ``==`` for equality,
canonical type names, and periods instead of frequencies.
"""

from __future__ import annotations

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
    PacingAnnotation,
    SpecificationAst,
    StreamRef,
    TriggerDecl,
    Unary,
    WindowAggregate,
)
from .values import format_duration

_PREC = {
    "or": 1,
    "and": 2,
    "==": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
}
_UNARY_PREC = 6


def pretty_print(ast: SpecificationAst) -> str:
    """Render a full specification; the empty AST renders as empty text."""
    lines = [print_declaration(d) for d in ast.decls]
    return "\n".join(lines) + ("\n" if lines else "")


def print_declaration(decl: Declaration) -> str:
    if isinstance(decl, InputDecl):
        return f"input {decl.name}: {decl.ty}"
    if isinstance(decl, ConstantDecl):
        return f"constant {decl.name}: {decl.ty} := {print_expression(decl.value)}"
    if isinstance(decl, OutputDecl):
        return _print_output(decl)
    if isinstance(decl, TriggerDecl):
        text = f"trigger {print_expression(decl.condition)}"
        if decl.message is not None:
            text += f' "{_escape(decl.message)}"'
        return text
    raise TypeError(f"unknown declaration {type(decl).__name__}")


def _print_output(decl: OutputDecl) -> str:
    head = f"output {decl.name}"
    if decl.pacing is not None:
        head += f" {_print_pacing(decl.pacing)}"
    clauses = []
    if decl.spawn is not None:
        clauses.append(f"spawn when {print_expression(decl.spawn)}")
    if decl.close is not None:
        clauses.append(f"close when {print_expression(decl.close)}")
    if decl.eval_when is not None:
        body = f"eval when {print_expression(decl.eval_when)} with {print_expression(decl.body)}"
    else:
        body = f":= {print_expression(decl.body)}"
    if clauses:
        parts = [head] + clauses + [body]
        return "\n  ".join(parts)
    return f"{head} {body}"


def _print_pacing(p: PacingAnnotation) -> str:
    if p.period_ns is None:
        return "@true"
    return f"@{format_duration(p.period_ns)}"


def print_expression(expr: Expression, context: int = 0) -> str:
    text, prec = _render(expr)
    if prec < context:
        return f"({text})"
    return text


def _render(expr: Expression) -> tuple[str, int]:
    if isinstance(expr, Literal):
        return _literal(expr.value), 99
    if isinstance(expr, StreamRef):
        return expr.name, 99
    if isinstance(expr, Unary):
        inner = print_expression(expr.operand, _UNARY_PREC)
        if expr.op == "not":
            return f"not {inner}", _UNARY_PREC
        return f"-{inner}", _UNARY_PREC
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        left = print_expression(expr.left, prec)
        right = print_expression(expr.right, prec + 1)
        return f"{left} {expr.op} {right}", prec
    if isinstance(expr, Call):
        args = ", ".join(print_expression(a) for a in expr.args)
        return f"{expr.func}({args})", 99
    if isinstance(expr, Cast):
        return f"cast<{expr.target}>({print_expression(expr.operand)})", 99
    if isinstance(expr, Offset):
        return (
            f"{expr.stream}.offset(by: {expr.offset}, "
            f"or: {print_expression(expr.default)})",
            99,
        )
    if isinstance(expr, Hold):
        return f"{expr.stream}.hold(or: {print_expression(expr.default)})", 99
    if isinstance(expr, WindowAggregate):
        text = (
            f"{expr.stream}.aggregate(over: {format_duration(expr.duration_ns)}, "
            f"using: {expr.func}"
        )
        if expr.default is not None:
            text += f", or: {print_expression(expr.default)}"
        return text + ")", 99
    raise TypeError(f"unknown expression {type(expr).__name__}")


def _literal(value: bool | int | float) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = repr(value)
        if "inf" in text or "nan" in text:
            raise ValueError("non-finite literals are not printable")
        return text
    return repr(value)


def _escape(message: str) -> str:
    return (
        message.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )
