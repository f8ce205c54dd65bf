"""Reader and printer for the parenthesized symbolic syntax used by domain,
problem, rule, plan and catalog files.

Symbols are case-insensitive and folded to lower case; double-quoted strings
keep their case. Integer and decimal literals become ``int`` / ``Fraction``.
A leading quote (``'join``) is accepted and ignored. ``;`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

SExpr = Union[str, int, Fraction, list]

_TOKEN = re.compile(r"""\s+|;[^\n]*|(?P<open>\()|(?P<close>\))|(?P<str>"[^"]*")|(?P<atom>[^\s()";]+)""")
_NUMBER = re.compile(r"[-+]?\d+(\.\d+)?$")


class SExprSyntaxError(ValueError):
    """Malformed input; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    offset: int


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def tokenize(text: str) -> Iterator[Token]:
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = _position(text, pos)
            raise SExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        if m.lastgroup is not None:
            yield Token(m.lastgroup, m.group(m.lastgroup), pos)
        pos = m.end()


def _atom(token: str) -> SExpr:
    if token.startswith("'") and len(token) > 1:
        token = token[1:]
    if _NUMBER.match(token):
        return int(token) if "." not in token else Fraction(token)
    return token.lower()


def read_all(text: str) -> list[SExpr]:
    """Parse every top-level form in ``text``."""
    stack: list[list] = [[]]
    opened: list[int] = []
    for tok in tokenize(text):
        if tok.kind == "open":
            stack.append([])
            opened.append(tok.offset)
        elif tok.kind == "close":
            if len(stack) == 1:
                raise SExprSyntaxError("unbalanced ')'", *_position(text, tok.offset))
            done = stack.pop()
            opened.pop()
            stack[-1].append(done)
        elif tok.kind == "str":
            stack[-1].append(tok.value[1:-1])
        else:
            stack[-1].append(_atom(tok.value))
    if len(stack) != 1:
        raise SExprSyntaxError("unclosed '('", *_position(text, opened[-1]))
    return stack[0]


def read(text: str) -> SExpr:
    forms = read_all(text)
    if len(forms) != 1:
        raise SExprSyntaxError(f"expected one form, found {len(forms)}", 1, 1)
    return forms[0]


def dumps(expr: SExpr) -> str:
    if isinstance(expr, list):
        return "(" + " ".join(dumps(e) for e in expr) + ")"
    if isinstance(expr, Fraction):
        return str(expr) if expr.denominator != 1 else str(expr.numerator)
    if isinstance(expr, str) and (not expr or re.search(r'[\s()";A-Z]', expr)):
        return '"' + expr + '"'
    return str(expr)


def keyword_args(items: list, start: int = 0) -> dict[str, SExpr]:
    """Collect ``:key value`` pairs from ``items[start:]``."""
    out: dict[str, SExpr] = {}
    i = start
    while i < len(items):
        key = items[i]
        if not (isinstance(key, str) and key.startswith(":")):
            raise ValueError(f"expected a keyword, got {dumps(key)}")
        if i + 1 >= len(items):
            raise ValueError(f"keyword {key} has no value")
        out[key] = items[i + 1]
        i += 2
    return out
