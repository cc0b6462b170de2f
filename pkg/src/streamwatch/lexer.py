"""Tokenizer for the specification language."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import SpecParseError
from .values import NS_PER_MIN, NS_PER_MS, NS_PER_SEC


class TokenKind(enum.Enum):
    IDENT = "identifier"
    INT = "integer"
    FLOAT = "float"
    STRING = "string"
    DURATION = "duration"
    FREQUENCY = "frequency"
    # keywords
    INPUT = "input"
    OUTPUT = "output"
    TRIGGER = "trigger"
    CONSTANT = "constant"
    SPAWN = "spawn"
    CLOSE = "close"
    EVAL = "eval"
    WHEN = "when"
    WITH = "with"
    AND = "and"
    OR = "or"
    NOT = "not"
    TRUE = "true"
    FALSE = "false"
    CAST = "cast"
    # punctuation / operators
    AT = "@"
    COLON = ":"
    ASSIGN = ":="
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    DOT = "."
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    EQ = "=="
    NEQ = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EOF = "end of input"


KEYWORDS = {
    "input": TokenKind.INPUT,
    "output": TokenKind.OUTPUT,
    "trigger": TokenKind.TRIGGER,
    "constant": TokenKind.CONSTANT,
    "spawn": TokenKind.SPAWN,
    "close": TokenKind.CLOSE,
    "eval": TokenKind.EVAL,
    "when": TokenKind.WHEN,
    "with": TokenKind.WITH,
    "and": TokenKind.AND,
    "or": TokenKind.OR,
    "not": TokenKind.NOT,
    "true": TokenKind.TRUE,
    "false": TokenKind.FALSE,
    "cast": TokenKind.CAST,
}

_UNIT_NS = {"ms": NS_PER_MS, "s": NS_PER_SEC, "min": NS_PER_MIN}

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int
    value: object = None  # int/float/str payload; ns for durations/frequencies


def tokenize(source: str) -> list[Token]:
    """Produce the token list for ``source``, ending with an EOF token.

    Raises :class:`SpecParseError` on unknown characters or bad literals.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def err(msg: str) -> SpecParseError:
        return SpecParseError(msg, line, col)

    def push(kind: TokenKind, text: str, value: object = None) -> None:
        tokens.append(Token(kind, text, line, col, value))

    while i < n:
        ch = source[i]

        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "/" and source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue

        start = i
        start_col = col

        # boolean connectives in mathematical notation
        if ch == "∧":  # ∧
            push(TokenKind.AND, ch)
            i += 1
            col += 1
            continue
        if ch == "∨":  # ∨
            push(TokenKind.OR, ch)
            i += 1
            col += 1
            continue
        if ch == "¬":  # ¬
            push(TokenKind.NOT, ch)
            i += 1
            col += 1
            continue

        if ch.isdigit():
            i += 1
            is_float = False
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                is_float = True
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    is_float = True
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            # a trailing letter run makes this a duration or frequency literal
            j = i
            while j < n and (source[j].isalpha()):
                j += 1
            unit = source[i:j]
            col = start_col
            if unit:
                i = j
                number = float(text) if is_float else int(text)
                if unit == "Hz":
                    if is_float or number <= 0:
                        raise err(f"frequency must be a positive integer: {text}Hz")
                    if NS_PER_SEC % number != 0:
                        raise err(
                            f"{number}Hz does not divide one second into whole "
                            "nanoseconds"
                        )
                    push(TokenKind.FREQUENCY, text + unit, NS_PER_SEC // number)
                elif unit in _UNIT_NS:
                    ns = number * _UNIT_NS[unit]
                    if isinstance(ns, float):
                        if not ns.is_integer():
                            raise err(
                                f"duration {text}{unit} is not a whole number "
                                "of nanoseconds"
                            )
                        ns = int(ns)
                    if ns <= 0:
                        raise err(f"duration must be positive: {text}{unit}")
                    push(TokenKind.DURATION, text + unit, ns)
                else:
                    raise err(f"unknown time unit {unit!r} (use ms, s, min, or Hz)")
            elif is_float:
                push(TokenKind.FLOAT, text, float(text))
            else:
                push(TokenKind.INT, text, int(text))
            col += i - start
            continue

        if ch.isalpha() or ch == "_":
            i += 1
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            push(KEYWORDS.get(text, TokenKind.IDENT), text)
            col += i - start
            continue

        if ch == '"':
            i += 1
            col += 1
            parts: list[str] = []
            while True:
                if i >= n or source[i] == "\n":
                    raise err("unterminated string literal")
                c = source[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n or source[i + 1] not in _ESCAPES:
                        raise err("invalid escape sequence in string")
                    parts.append(_ESCAPES[source[i + 1]])
                    i += 2
                    col += 2
                    continue
                parts.append(c)
                i += 1
                col += 1
            tokens.append(
                Token(TokenKind.STRING, source[start:i], line, start_col, "".join(parts))
            )
            continue

        two = source[i : i + 2]
        if two == ":=":
            push(TokenKind.ASSIGN, two)
            i += 2
            col += 2
            continue
        if two == "==":
            push(TokenKind.EQ, two)
            i += 2
            col += 2
            continue
        if two == "!=":
            push(TokenKind.NEQ, two)
            i += 2
            col += 2
            continue
        if two == "<=":
            push(TokenKind.LE, two)
            i += 2
            col += 2
            continue
        if two == ">=":
            push(TokenKind.GE, two)
            i += 2
            col += 2
            continue

        single = {
            "@": TokenKind.AT,
            ":": TokenKind.COLON,
            "(": TokenKind.LPAREN,
            ")": TokenKind.RPAREN,
            ",": TokenKind.COMMA,
            ".": TokenKind.DOT,
            "+": TokenKind.PLUS,
            "-": TokenKind.MINUS,
            "*": TokenKind.STAR,
            "/": TokenKind.SLASH,
            "<": TokenKind.LT,
            ">": TokenKind.GT,
        }
        if ch == "=":  # single '=' is accepted as equality
            push(TokenKind.EQ, ch)
            i += 1
            col += 1
            continue
        if ch in single:
            push(single[ch], ch)
            i += 1
            col += 1
            continue

        raise err(f"unexpected character {ch!r}")

    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens
