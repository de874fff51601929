"""Minimal reader/printer for the parenthesized symbolic netlist syntax.

Only what the native netlist and term syntax need: lists, symbols,
numbers, the quote prefix and ``;`` line comments.  Numbers are kept as
exact :class:`fractions.Fraction` values so that ``1/5`` and ``0.2`` read
identically.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any


class SexprError(ValueError):
    """Raised on malformed symbolic-expression text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Symbol(str):
    """A bare identifier.  Distinct from a number or a quoted datum."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"Symbol({str.__repr__(self)})"


@dataclass(frozen=True)
class Quoted:
    datum: Any


_TOKEN = re.compile(r"""\s*(?:(;[^\n]*)|([()'])|([^\s()';]+))""")
_NUMBER = re.compile(
    r"^[+-]?(?:\d+/\d+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)$"
)


def parse_number(text: str) -> Fraction | None:
    """Exact rational value of a numeric literal, or None if not numeric."""
    if not _NUMBER.match(text):
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


def _tokenize(text: str):
    pos = 0
    line = 1
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            # only trailing whitespace remains
            if text[pos:].strip() == "":
                return
            raise SexprError(f"unexpected character {text[pos]!r}", line)
        line += text.count("\n", pos, m.start(m.lastindex))
        pos = m.end()
        comment, punct, atom = m.groups()
        if comment is not None:
            continue
        yield (punct or atom), punct is not None, line


def read_all(text: str) -> list[Any]:
    """Read every top-level datum in ``text``."""
    stack: list[list[Any]] = [[]]
    opened: list[int] = []
    quotes: list[list[int]] = [[]]  # pending quote counts per nesting level

    def push(datum):
        q = quotes[-1]
        while q and q[-1] == len(stack[-1]):
            q.pop()
            datum = Quoted(datum)
        stack[-1].append(datum)

    for tok, is_punct, line in _tokenize(text):
        if is_punct and tok == "(":
            stack.append([])
            quotes.append([])
            opened.append(line)
        elif is_punct and tok == ")":
            if len(stack) == 1:
                raise SexprError("unbalanced ')'", line)
            if quotes[-1]:
                raise SexprError("quote with no datum before ')'", line)
            quotes.pop()
            opened.pop()
            push(stack.pop())
        elif is_punct and tok == "'":
            quotes[-1].append(len(stack[-1]))
        else:
            num = parse_number(tok)
            push(num if num is not None else Symbol(tok))
    if len(stack) > 1:
        raise SexprError("unbalanced '(': list never closed", opened[-1])
    if quotes[0]:
        raise SexprError("quote with no datum at end of input")
    return stack[0]


def read_one(text: str) -> Any:
    data = read_all(text)
    if len(data) != 1:
        raise SexprError(f"expected exactly one form, found {len(data)}")
    return data[0]


def format_number(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def dumps(datum: Any) -> str:
    """Print a datum back into the symbolic syntax (single line)."""
    if isinstance(datum, Quoted):
        return "'" + dumps(datum.datum)
    if isinstance(datum, list):
        return "(" + " ".join(dumps(d) for d in datum) + ")"
    if isinstance(datum, Fraction):
        return format_number(datum)
    if isinstance(datum, int):
        return str(datum)
    if isinstance(datum, float):
        return repr(datum)
    return str(datum)
