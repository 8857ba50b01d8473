"""Tseitin encoding of quantifier-free formulas into a Dpll clause set."""
from __future__ import annotations

from typing import Callable

from ..errors import NOT_GROUND, Unsupported
from ..logic.printer import pretty_formula
from ..logic.syntax import And, Atom, BoolConst, Eq, Formula, Iff, Implies, Not, Or
from .sat import Dpll


class Tseitin:
    """atom_lit maps an atom or equality to its literal; it is called at
    most once per distinct atom."""

    def __init__(self, sat: Dpll, atom_lit: Callable[[Formula], int]) -> None:
        self.sat = sat
        self.atom_lit = atom_lit
        self.cache: dict[Formula, int] = {}
        self._true: int = 0

    def true_lit(self) -> int:
        if not self._true:
            self._true = self.sat.new_var()
            self.sat.add_clause([self._true])
        return self._true

    def encode(self, f: Formula) -> int:
        hit = self.cache.get(f)
        if hit is not None:
            return hit
        if isinstance(f, BoolConst):
            lit = self.true_lit() if f.value else -self.true_lit()
        elif isinstance(f, (Atom, Eq)):
            lit = self.atom_lit(f)
        elif isinstance(f, Not):
            lit = -self.encode(f.arg)
        elif isinstance(f, (And, Or)):
            kids = [self.encode(a) for a in f.args]
            lit = self.sat.new_var()
            if isinstance(f, And):
                for k in kids:
                    self.sat.add_clause([-lit, k])
                self.sat.add_clause([lit] + [-k for k in kids])
            else:
                for k in kids:
                    self.sat.add_clause([lit, -k])
                self.sat.add_clause([-lit] + kids)
        elif isinstance(f, Implies):
            lit = self.encode(Or((Not(f.lhs), f.rhs)))
        elif isinstance(f, Iff):
            l, r = self.encode(f.lhs), self.encode(f.rhs)
            lit = self.sat.new_var()
            self.sat.add_clause([-lit, -l, r])
            self.sat.add_clause([-lit, l, -r])
            self.sat.add_clause([lit, l, r])
            self.sat.add_clause([lit, -l, -r])
        else:
            raise Unsupported(NOT_GROUND, f"quantified formula in ground query: {pretty_formula(f)}")
        self.cache[f] = lit
        return lit
