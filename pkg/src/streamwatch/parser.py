"""Recursive-descent parser producing a :class:`SpecificationAst`.

Declarations are introduced by the keywords ``input``, ``constant``,
``output``, and ``trigger``; newlines are not significant, so multi-line
declarations (spawn/close/eval clauses) parse naturally.
"""

from __future__ import annotations

from .ast_nodes import (
    ANY_EVENT,
    Binary,
    Call,
    Cast,
    ConstantDecl,
    Expression,
    Hold,
    InputDecl,
    Literal,
    Offset,
    OutputDecl,
    PacingAnnotation,
    SourceLoc,
    SpecificationAst,
    StreamRef,
    TriggerDecl,
    Unary,
    WindowAggregate,
)
from .errors import SpecParseError
from .lexer import Token, TokenKind, tokenize
from .values import TYPE_NAMES, ValueType

# Built-in functions callable as ``name(args...)``.
BUILTIN_ARITY = {
    "abs": (1, 1),
    "sqrt": (1, 1),
    "time": (0, 0),
    "avg": (2, None),
    "min": (2, None),
    "max": (2, None),
}

WINDOW_FUNCTIONS = frozenset({"avg", "sum", "count", "min", "max"})

# binary operator precedence (higher binds tighter); all left-associative
_BIN_PREC = {
    TokenKind.OR: 1,
    TokenKind.AND: 2,
    TokenKind.EQ: 3,
    TokenKind.NEQ: 3,
    TokenKind.LT: 3,
    TokenKind.LE: 3,
    TokenKind.GT: 3,
    TokenKind.GE: 3,
    TokenKind.PLUS: 4,
    TokenKind.MINUS: 4,
    TokenKind.STAR: 5,
    TokenKind.SLASH: 5,
}

_BIN_OP_TEXT = {
    TokenKind.OR: "or",
    TokenKind.AND: "and",
    TokenKind.EQ: "==",
    TokenKind.NEQ: "!=",
    TokenKind.LT: "<",
    TokenKind.LE: "<=",
    TokenKind.GT: ">",
    TokenKind.GE: ">=",
    TokenKind.PLUS: "+",
    TokenKind.MINUS: "-",
    TokenKind.STAR: "*",
    TokenKind.SLASH: "/",
}

_DECL_KEYWORDS = (
    TokenKind.INPUT,
    TokenKind.CONSTANT,
    TokenKind.OUTPUT,
    TokenKind.TRIGGER,
)


def parse(text: str) -> SpecificationAst:
    """Parse specification source into an AST.

    Raises :class:`SpecParseError` with line/column and the expected-token
    set on the first lexical or syntactic error.
    """
    return _Parser(tokenize(text)).parse_spec()


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    # ── token plumbing ───────────────────────────────────────────

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: TokenKind) -> bool:
        return self.cur.kind == kind

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: TokenKind, *alternatives: TokenKind) -> Token:
        if self.cur.kind is kind:
            return self.advance()
        raise self.error_expected(kind, *alternatives)

    def error_expected(self, *kinds: TokenKind) -> SpecParseError:
        tok = self.cur
        got = tok.text or str(tok.kind.value)
        return SpecParseError(
            f"unexpected {got!r}",
            tok.line,
            tok.column,
            tuple(k.value for k in kinds),
        )

    def loc(self, tok: Token | None = None) -> SourceLoc:
        tok = tok or self.cur
        return SourceLoc(tok.line, tok.column)

    # ── declarations ─────────────────────────────────────────────

    def parse_spec(self) -> SpecificationAst:
        decls = []
        seen: dict[str, SourceLoc] = {}
        while not self.at(TokenKind.EOF):
            if self.at(TokenKind.INPUT):
                decl = self.parse_input()
            elif self.at(TokenKind.CONSTANT):
                decl = self.parse_constant()
            elif self.at(TokenKind.OUTPUT):
                decl = self.parse_output()
            elif self.at(TokenKind.TRIGGER):
                decl = self.parse_trigger()
            else:
                raise self.error_expected(*_DECL_KEYWORDS)
            name = getattr(decl, "name", None)
            if name is not None:
                if name in seen:
                    raise SpecParseError(
                        f"duplicate declaration name {name!r} "
                        f"(first declared at {seen[name]})",
                        decl.loc.line,
                        decl.loc.column,
                    )
                seen[name] = decl.loc
            decls.append(decl)
        return SpecificationAst(decls=decls)

    def parse_input(self) -> InputDecl:
        start = self.loc()
        self.expect(TokenKind.INPUT)
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.COLON)
        ty = self.parse_type()
        return InputDecl(loc=start, name=name, ty=ty)

    def parse_constant(self) -> ConstantDecl:
        start = self.loc()
        self.expect(TokenKind.CONSTANT)
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.COLON)
        ty = self.parse_type()
        self.expect(TokenKind.ASSIGN)
        value = self.parse_expression()
        return ConstantDecl(loc=start, name=name, ty=ty, value=value)

    def parse_type(self) -> ValueType:
        tok = self.expect(TokenKind.IDENT)
        ty = TYPE_NAMES.get(tok.text)
        if ty is None:
            raise SpecParseError(
                f"unknown type {tok.text!r}",
                tok.line,
                tok.column,
                tuple(sorted(TYPE_NAMES)),
            )
        return ty

    def parse_pacing(self) -> PacingAnnotation:
        self.expect(TokenKind.AT)
        if self.at(TokenKind.TRUE):
            self.advance()
            return ANY_EVENT
        if self.at(TokenKind.DURATION) or self.at(TokenKind.FREQUENCY):
            return PacingAnnotation(int(self.advance().value))
        raise self.error_expected(
            TokenKind.DURATION, TokenKind.FREQUENCY, TokenKind.TRUE
        )

    def parse_output(self) -> OutputDecl:
        start = self.loc()
        self.expect(TokenKind.OUTPUT)
        name = self.expect(TokenKind.IDENT).text

        pacing = None
        if self.at(TokenKind.AT):
            pacing = self.parse_pacing()

        spawn = close = None
        if self.at(TokenKind.SPAWN):
            self.advance()
            self.expect(TokenKind.WHEN)
            spawn = self.parse_expression()
        if self.at(TokenKind.CLOSE):
            self.advance()
            self.expect(TokenKind.WHEN)
            close = self.parse_expression()

        eval_when = None
        if self.at(TokenKind.ASSIGN):
            self.advance()
            body = self.parse_expression()
        elif self.at(TokenKind.EVAL):
            self.advance()
            if self.at(TokenKind.AT):
                if pacing is not None:
                    tok = self.cur
                    raise SpecParseError(
                        f"output {name!r} has more than one pacing annotation",
                        tok.line,
                        tok.column,
                    )
                pacing = self.parse_pacing()
            if self.at(TokenKind.WHEN):
                self.advance()
                eval_when = self.parse_expression()
            self.expect(TokenKind.WITH)
            body = self.parse_expression()
        else:
            raise self.error_expected(
                TokenKind.ASSIGN, TokenKind.EVAL, TokenKind.SPAWN, TokenKind.CLOSE
            )

        return OutputDecl(
            loc=start,
            name=name,
            pacing=pacing,
            spawn=spawn,
            close=close,
            eval_when=eval_when,
            body=body,
        )

    def parse_trigger(self) -> TriggerDecl:
        start = self.loc()
        self.expect(TokenKind.TRIGGER)
        condition = self.parse_expression()
        message = None
        if self.at(TokenKind.STRING):
            message = str(self.advance().value)
        return TriggerDecl(loc=start, condition=condition, message=message)

    # ── expressions ──────────────────────────────────────────────

    def parse_expression(self, min_prec: int = 1) -> Expression:
        left = self.parse_unary()
        while True:
            prec = _BIN_PREC.get(self.cur.kind)
            if prec is None or prec < min_prec:
                return left
            op_tok = self.advance()
            right = self.parse_expression(prec + 1)
            left = Binary(
                loc=self.loc(op_tok),
                op=_BIN_OP_TEXT[op_tok.kind],
                left=left,
                right=right,
            )

    def parse_unary(self) -> Expression:
        if self.at(TokenKind.MINUS):
            tok = self.advance()
            return Unary(loc=self.loc(tok), op="-", operand=self.parse_unary())
        if self.at(TokenKind.NOT):
            tok = self.advance()
            return Unary(loc=self.loc(tok), op="not", operand=self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expression:
        expr = self.parse_atom()
        while self.at(TokenKind.DOT):
            self.advance()
            method = self.expect(TokenKind.IDENT)
            if method.text in ("offset", "hold", "aggregate"):
                if not isinstance(expr, StreamRef):
                    raise SpecParseError(
                        f"{method.text} applies to a stream name",
                        method.line,
                        method.column,
                    )
                expr = self.parse_stream_access(expr, method)
            elif method.text == "defaults":
                if not isinstance(expr, WindowAggregate) or expr.default is not None:
                    raise SpecParseError(
                        "defaults(to:) follows an aggregate without a default",
                        method.line,
                        method.column,
                    )
                self.expect(TokenKind.LPAREN)
                self.expect_label("to")
                expr.default = self.parse_expression()
                self.expect(TokenKind.RPAREN)
            else:
                raise SpecParseError(
                    f"unknown stream access {method.text!r}",
                    method.line,
                    method.column,
                    ("offset", "hold", "aggregate", "defaults"),
                )
        return expr

    def parse_stream_access(self, target: StreamRef, method: Token) -> Expression:
        loc = self.loc(method)
        self.expect(TokenKind.LPAREN)
        if method.text == "offset":
            self.expect_label("by")
            sign = self.expect(TokenKind.MINUS)
            mag = self.expect(TokenKind.INT)
            if int(mag.value) == 0:
                raise SpecParseError(
                    "offset must be strictly negative", sign.line, sign.column
                )
            self.expect(TokenKind.COMMA)
            self.expect_label("or")
            default = self.parse_expression()
            self.expect(TokenKind.RPAREN)
            return Offset(
                loc=loc, stream=target.name, offset=-int(mag.value), default=default
            )
        if method.text == "hold":
            self.expect_label("or")
            default = self.parse_expression()
            self.expect(TokenKind.RPAREN)
            return Hold(loc=loc, stream=target.name, default=default)
        # aggregate(over: D, using: f[, or: d])
        self.expect_label("over")
        duration = self.expect(TokenKind.DURATION)
        self.expect(TokenKind.COMMA)
        self.expect_label("using")
        func = self.expect(TokenKind.IDENT)
        if func.text not in WINDOW_FUNCTIONS:
            raise SpecParseError(
                f"unknown window function {func.text!r}",
                func.line,
                func.column,
                tuple(sorted(WINDOW_FUNCTIONS)),
            )
        default = None
        if self.at(TokenKind.COMMA):
            self.advance()
            self.expect_label("or")
            default = self.parse_expression()
        self.expect(TokenKind.RPAREN)
        return WindowAggregate(
            loc=loc,
            stream=target.name,
            duration_ns=int(duration.value),
            func=func.text,
            default=default,
        )

    def expect_label(self, label: str) -> None:
        # Argument labels are contextual; 'or' arrives as a keyword token.
        tok = self.cur
        ok = (tok.kind is TokenKind.IDENT and tok.text == label) or (
            label == "or" and tok.kind is TokenKind.OR
        )
        if not ok:
            raise SpecParseError(
                f"expected argument label {label + ':'!r}", tok.line, tok.column
            )
        self.advance()
        self.expect(TokenKind.COLON)

    def parse_atom(self) -> Expression:
        tok = self.cur
        if tok.kind is TokenKind.INT:
            self.advance()
            return Literal(loc=self.loc(tok), value=int(tok.value))
        if tok.kind is TokenKind.FLOAT:
            self.advance()
            return Literal(loc=self.loc(tok), value=float(tok.value))
        if tok.kind is TokenKind.TRUE:
            self.advance()
            return Literal(loc=self.loc(tok), value=True)
        if tok.kind is TokenKind.FALSE:
            self.advance()
            return Literal(loc=self.loc(tok), value=False)
        if tok.kind is TokenKind.CAST:
            self.advance()
            self.expect(TokenKind.LT)
            target = self.parse_type()
            self.expect(TokenKind.GT)
            self.expect(TokenKind.LPAREN)
            operand = self.parse_expression()
            self.expect(TokenKind.RPAREN)
            return Cast(loc=self.loc(tok), target=target, operand=operand)
        if tok.kind is TokenKind.LPAREN:
            self.advance()
            expr = self.parse_expression()
            self.expect(TokenKind.RPAREN)
            return expr
        if tok.kind is TokenKind.IDENT:
            self.advance()
            if self.at(TokenKind.LPAREN):
                return self.parse_call(tok)
            return StreamRef(loc=self.loc(tok), name=tok.text)
        raise self.error_expected(
            TokenKind.IDENT, TokenKind.INT, TokenKind.FLOAT, TokenKind.LPAREN
        )

    def parse_call(self, name: Token) -> Expression:
        arity = BUILTIN_ARITY.get(name.text)
        if arity is None:
            raise SpecParseError(
                f"unknown function {name.text!r}",
                name.line,
                name.column,
                tuple(sorted(BUILTIN_ARITY)),
            )
        self.expect(TokenKind.LPAREN)
        args: list[Expression] = []
        if not self.at(TokenKind.RPAREN):
            args.append(self.parse_expression())
            while self.at(TokenKind.COMMA):
                self.advance()
                args.append(self.parse_expression())
        self.expect(TokenKind.RPAREN)
        lo, hi = arity
        if len(args) < lo or (hi is not None and len(args) > hi):
            wanted = str(lo) if hi == lo else (f"at least {lo}" if hi is None else f"{lo}..{hi}")
            raise SpecParseError(
                f"{name.text} takes {wanted} argument(s), got {len(args)}",
                name.line,
                name.column,
            )
        return Call(loc=self.loc(name), func=name.text, args=args)
