"""Purification of mixed ground formulas.

An alien subterm (a term whose top symbol belongs to the other theory)
is replaced by a fresh constant of the shared sort; the defining equality
goes to the theory that owns the subterm.  Atoms are then pure: their home
is WF, PM, or the substrate (equalities between shared constants).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..logic.printer import pretty_term
from ..logic.syntax import (
    PM, STATE_PRED, STATE_VAR, SUBSTRATE, WF, And, App, Atom, BoolConst, Eq, Formula, FunDecl, Iff,
    Implies, Not, Or, Signature, Term, Var,
)

SUB = SUBSTRATE


class PurificationError(ValueError):
    pass


def fun_home(sig: Signature, name: str) -> str:
    d = sig.funs.get(name)
    if d is None:
        raise PurificationError(f"symbol {name} has no declaration")
    if d.tag in (WF, STATE_VAR):
        return WF
    if d.tag == PM:
        return PM
    if d.tag == SUBSTRATE:
        return SUB
    raise PurificationError(f"symbol {name} has no theory tag")


def pred_home(sig: Signature, name: str) -> str:
    d = sig.preds.get(name)
    if d is None:
        raise PurificationError(f"predicate {name} has no declaration")
    if d.tag == STATE_PRED:
        return WF if any(sig.sort_tag(s) == WF for s in d.args) else PM
    if d.tag == PM:
        return PM
    if d.tag == WF:
        return WF
    raise PurificationError(f"predicate {name} has no theory tag")


def term_home(sig: Signature, t: Term) -> str:
    if isinstance(t, Var):
        raise PurificationError(f"variable {t.name} in ground formula")
    h = fun_home(sig, t.fun)
    if h == SUB and t.args:
        # substrate functions take the home of their first non-substrate argument
        for a in t.args:
            ah = term_home(sig, a)
            if ah != SUB:
                return ah
    return h


@dataclass
class PurifiedQuery:
    formula: Formula
    definitions: list[Eq] = field(default_factory=list)
    def_home: dict[Formula, str] = field(default_factory=dict)
    shared: list[App] = field(default_factory=list)
    origin: dict[App, Term] = field(default_factory=dict)
    atom_home: dict[Formula, str] = field(default_factory=dict)
    decls: list[FunDecl] = field(default_factory=list)

    def wf_part(self) -> list[Formula]:
        return [a for a, h in self.atom_home.items() if h in (WF, SUB)]

    def pm_part(self) -> list[Formula]:
        return [a for a, h in self.atom_home.items() if h in (PM, SUB)]


class Purifier:
    def __init__(self, sig: Signature, prefix: str = "pur") -> None:
        self.sig = sig
        self.prefix = prefix
        self.names: dict[Term, App] = {}
        self.q = PurifiedQuery(formula=BoolConst(True))
        self._n = 0

    def _fresh(self, t: Term) -> App:
        hit = self.names.get(t)
        if hit is not None:
            return hit
        while True:
            name = f"{self.prefix}.{self._n}"
            self._n += 1
            if name not in self.sig.funs:
                break
        c = App(name, (), t.sort)
        decl = FunDecl(name, (), t.sort, SUBSTRATE)
        self.q.decls.append(decl)
        self.names[t] = c
        self.q.shared.append(c)
        self.q.origin[c] = t
        home = term_home(self.sig, t)
        body = self.term(t, home)
        d = Eq(c, body)
        self.q.definitions.append(d)
        self.q.def_home[d] = home
        self.q.atom_home[d] = home
        return c

    def term(self, t: Term, home: str) -> Term:
        """Purify t for use inside an atom owned by home."""
        if isinstance(t, Var):
            raise PurificationError(f"variable {t.name} in ground formula")
        th = term_home(self.sig, t)
        if th not in (home, SUB):
            if not self.sig.is_substrate_sort(t.sort):
                raise PurificationError(
                    f"term {pretty_term(t)} of private sort {t.sort} occurs in a {home} atom"
                )
            return self._fresh(t)
        if not t.args:
            return t
        inner = home if th == SUB else th
        return App(t.fun, tuple(self.term(a, inner) for a in t.args), t.sort, t.primed)

    def atom(self, a: Formula) -> Formula:
        if isinstance(a, Atom):
            home = pred_home(self.sig, a.pred)
            out = Atom(a.pred, tuple(self.term(t, home) for t in a.args), a.primed)
            self.q.atom_home[out] = home
            return out
        assert isinstance(a, Eq)
        hl, hr = term_home(self.sig, a.lhs), term_home(self.sig, a.rhs)
        homes = {hl, hr} - {SUB}
        if not homes:
            home = SUB
            lhs, rhs = self.term(a.lhs, SUB), self.term(a.rhs, SUB)
            if lhs.args or rhs.args:
                home = WF
        elif len(homes) == 1:
            home = homes.pop()
            lhs, rhs = self.term(a.lhs, home), self.term(a.rhs, home)
        else:
            home = WF
            lhs, rhs = self.term(a.lhs, WF), self.term(a.rhs, WF)
        out = Eq(lhs, rhs)
        if home in (WF, PM) and not lhs.args and not rhs.args and self._shared_const(lhs) and self._shared_const(rhs):
            home = SUB
        self.q.atom_home[out] = home
        return out

    def _shared_const(self, t: Term) -> bool:
        if not isinstance(t, App) or t.args:
            return False
        return t in self.q.origin or fun_home(self.sig, t.fun) == SUB

    def formula(self, f: Formula) -> Formula:
        if isinstance(f, BoolConst):
            return f
        if isinstance(f, (Atom, Eq)):
            return self.atom(f)
        if isinstance(f, Not):
            return Not(self.formula(f.arg))
        if isinstance(f, And):
            return And(tuple(self.formula(a) for a in f.args))
        if isinstance(f, Or):
            return Or(tuple(self.formula(a) for a in f.args))
        if isinstance(f, Implies):
            return Implies(self.formula(f.lhs), self.formula(f.rhs))
        if isinstance(f, Iff):
            return Iff(self.formula(f.lhs), self.formula(f.rhs))
        raise PurificationError("purification expects a quantifier-free formula")


def purify(f: Formula, sig: Signature, prefix: str = "pur") -> PurifiedQuery:
    p = Purifier(sig, prefix)
    g = p.formula(f)
    p.q.formula = g
    return p.q
