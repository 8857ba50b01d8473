"""S-expression reader that keeps source positions."""
from __future__ import annotations

from typing import Union


class SpecError(Exception):
    """Parse or elaboration error with a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, production: str = "") -> None:
        self.message = message
        self.line = line
        self.col = col
        self.production = production
        where = f"{line}:{col}: " if line else ""
        what = f" [{production}]" if production else ""
        super().__init__(f"{where}{message}{what}")


class Sym(str):
    line: int
    col: int

    def __new__(cls, text: str, line: int = 0, col: int = 0) -> "Sym":
        s = super().__new__(cls, text)
        s.line = line
        s.col = col
        return s


class SList(list):
    line: int = 0
    col: int = 0


SExpr = Union[Sym, SList]

_DELIMS = set("();")


def read_all(text: str) -> list[SExpr]:
    """Read every top-level s-expression of text."""
    stack: list[SList] = []
    top: list[SExpr] = []
    i, n = 0, len(text)
    line, col = 1, 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
            i += 1
            col += 1
            continue
        if ch == ")":
            if not stack:
                raise SpecError("unbalanced ')'", line, col, "sexpr")
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
            i += 1
            col += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in _DELIMS:
            j += 1
        sym = Sym(text[i:j], line, col)
        col += j - i
        i = j
        (stack[-1] if stack else top).append(sym)
    if stack:
        s = stack[-1]
        raise SpecError("unbalanced '('", s.line, s.col, "sexpr")
    return top


def pos(x: SExpr) -> tuple[int, int]:
    return getattr(x, "line", 0), getattr(x, "col", 0)
