"""Many-sorted first-order terms, formulas and signatures.

All syntax objects are frozen dataclasses with a cached structural hash, so
they can be used freely as dictionary keys and set members.  A prime on a
state variable or state predicate is a flag on the symbol reference, never
part of its name.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

# symbol tags
SUBSTRATE = "substrate"
WF = "wf"
PM = "pm"
STATE_VAR = "state-variable"
STATE_PRED = "state-predicate"
TAGS = (SUBSTRATE, WF, PM, STATE_VAR, STATE_PRED)

# sort kinds
UNINTERPRETED = "uninterpreted"
ENUMERATED = "enumerated"
BOOLEAN = "boolean"


class SortError(TypeError):
    pass


class _Node:
    """Mixin giving frozen dataclasses a hash computed once."""

    __slots__ = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", hash((type(self).__name__,) + self._key()))

    def __hash__(self) -> int:
        return self._h  # type: ignore[attr-defined]

    def _key(self) -> tuple:
        raise NotImplementedError

    def __str__(self) -> str:
        from .printer import pretty

        return pretty(self)


# ---------------------------------------------------------------- terms


class Term(_Node):
    sort: str


@dataclass(frozen=True, eq=True)
class Var(Term):
    name: str
    sort: str

    def _key(self) -> tuple:
        return (self.name, self.sort)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class App(Term):
    """Function application; constants are zero-ary applications."""

    fun: str
    args: tuple = ()
    sort: str = ""
    primed: bool = False

    def _key(self) -> tuple:
        return (self.fun, self.args, self.sort, self.primed)

    __hash__ = _Node.__hash__

    @property
    def is_const(self) -> bool:
        return not self.args


def const(name: str, sort: str) -> App:
    return App(name, (), sort)


# ---------------------------------------------------------------- formulas


class Formula(_Node):
    pass


@dataclass(frozen=True, eq=True)
class BoolConst(Formula):
    value: bool

    def _key(self) -> tuple:
        return (self.value,)

    __hash__ = _Node.__hash__


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    pred: str
    args: tuple = ()
    primed: bool = False

    def _key(self) -> tuple:
        return (self.pred, self.args, self.primed)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Eq(Formula):
    lhs: Term
    rhs: Term

    def _key(self) -> tuple:
        return (self.lhs, self.rhs)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Not(Formula):
    arg: Formula

    def _key(self) -> tuple:
        return (self.arg,)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class And(Formula):
    args: tuple

    def _key(self) -> tuple:
        return self.args

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: tuple

    def _key(self) -> tuple:
        return self.args

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    def _key(self) -> tuple:
        return (self.lhs, self.rhs)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula

    def _key(self) -> tuple:
        return (self.lhs, self.rhs)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Forall(Formula):
    vars: tuple
    body: Formula

    def _key(self) -> tuple:
        return (self.vars, self.body)

    __hash__ = _Node.__hash__


@dataclass(frozen=True, eq=True)
class Exists(Formula):
    vars: tuple
    body: Formula

    def _key(self) -> tuple:
        return (self.vars, self.body)

    __hash__ = _Node.__hash__


Quantifier = Union[Forall, Exists]
Literal = Union[Atom, Eq, Not]


# ---------------------------------------------------------------- smart constructors


def conj(*fs: Formula) -> Formula:
    out: list[Formula] = []
    for f in fs:
        parts = f.args if isinstance(f, And) else (f,)
        for p in parts:
            if p == FALSE:
                return FALSE
            if p != TRUE and p not in out:
                out.append(p)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out: list[Formula] = []
    for f in fs:
        parts = f.args if isinstance(f, Or) else (f,)
        for p in parts:
            if p == TRUE:
                return TRUE
            if p != FALSE and p not in out:
                out.append(p)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, BoolConst):
        return FALSE if f.value else TRUE
    return Not(f)


def ite(c: Formula, t: Formula, e: Formula) -> Formula:
    """Desugared if-then-else: (c and t) or (not c and e)."""
    return disj(conj(c, t), conj(neg(c), e))


def forall(vs: Iterable[Var], body: Formula) -> Formula:
    vs = tuple(vs)
    return Forall(vs, body) if vs else body


def exists(vs: Iterable[Var], body: Formula) -> Formula:
    vs = tuple(vs)
    return Exists(vs, body) if vs else body


# ---------------------------------------------------------------- traversal


def term_children(t: Term) -> tuple:
    return t.args if isinstance(t, App) else ()


def subterms(t: Term) -> Iterator[Term]:
    """Post-order enumeration of all subterms, the term itself last."""
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
    yield t


def term_depth(t: Term) -> int:
    if isinstance(t, App) and t.args:
        return 1 + max(term_depth(a) for a in t.args)
    return 0


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


def term_vars(t: Term) -> set[Var]:
    if isinstance(t, Var):
        return {t}
    out: set[Var] = set()
    for a in t.args:
        out |= term_vars(a)
    return out


def is_ground_term(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return all(is_ground_term(a) for a in t.args)


def formula_children(f: Formula) -> tuple:
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Iff)):
        return (f.lhs, f.rhs)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    return ()


def atom_terms(f: Formula) -> tuple:
    if isinstance(f, Atom):
        return f.args
    if isinstance(f, Eq):
        return (f.lhs, f.rhs)
    return ()


def iter_formulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in formula_children(f):
        yield from iter_formulas(c)


def atoms(f: Formula) -> list[Formula]:
    """Atoms and equalities of f, in first-occurrence order, no duplicates."""
    seen: dict[Formula, None] = {}
    for g in iter_formulas(f):
        if isinstance(g, (Atom, Eq)):
            seen.setdefault(g, None)
    return list(seen)


def formula_terms(f: Formula) -> list[Term]:
    """All subterms of f (ground or not), first-occurrence order."""
    seen: dict[Term, None] = {}
    for a in atoms(f):
        for t in atom_terms(a):
            for s in subterms(t):
                seen.setdefault(s, None)
    return list(seen)


def free_vars(f: Formula) -> set[Var]:
    if isinstance(f, (Atom, Eq)):
        out: set[Var] = set()
        for t in atom_terms(f):
            out |= term_vars(t)
        return out
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - set(f.vars)
    out = set()
    for c in formula_children(f):
        out |= free_vars(c)
    return out


def all_vars(f: Formula) -> set[Var]:
    """Free and bound variables."""
    out: set[Var] = set()
    for g in iter_formulas(f):
        if isinstance(g, (Forall, Exists)):
            out |= set(g.vars)
        for t in atom_terms(g):
            out |= term_vars(t)
    return out


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, (Forall, Exists)) for g in iter_formulas(f))


def is_ground(f: Formula) -> bool:
    return is_quantifier_free(f) and not free_vars(f)


def has_primes(f: Formula) -> bool:
    for g in iter_formulas(f):
        if isinstance(g, Atom) and g.primed:
            return True
        for t in atom_terms(g):
            for s in subterms(t):
                if isinstance(s, App) and s.primed:
                    return True
    return False


def is_literal(f: Formula) -> bool:
    if isinstance(f, Not):
        f = f.arg
    return isinstance(f, (Atom, Eq, BoolConst))


def literal_atom(f: Formula) -> tuple[Formula, bool]:
    """Split a literal into (atom, polarity)."""
    if isinstance(f, Not):
        return f.arg, False
    return f, True


# ---------------------------------------------------------------- signatures


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str = UNINTERPRETED
    constants: tuple = ()
    tag: str = WF

    @property
    def is_enumerated(self) -> bool:
        return self.kind == ENUMERATED


@dataclass(frozen=True)
class FunDecl:
    name: str
    args: tuple
    result: str
    tag: str

    @property
    def is_const(self) -> bool:
        return not self.args


@dataclass(frozen=True)
class PredDecl:
    name: str
    args: tuple
    tag: str


class Signature:
    """Sorts and symbols of a two-level system.

    A signature is built incrementally while parsing and is treated as
    read-only afterwards; `extended` returns an enlarged copy.
    """

    def __init__(self) -> None:
        self.sorts: dict[str, Sort] = {}
        self.funs: dict[str, FunDecl] = {}
        self.preds: dict[str, PredDecl] = {}

    def copy(self) -> "Signature":
        s = Signature()
        s.sorts = dict(self.sorts)
        s.funs = dict(self.funs)
        s.preds = dict(self.preds)
        return s

    def extended(self, funs: Iterable[FunDecl] = (), preds: Iterable[PredDecl] = ()) -> "Signature":
        s = self.copy()
        for f in funs:
            s.add_fun(f)
        for p in preds:
            s.add_pred(p)
        return s

    def _check_fresh(self, name: str) -> None:
        if name in self.funs or name in self.preds:
            raise ValueError(f"symbol {name!r} declared twice")

    def add_sort(self, sort: Sort) -> None:
        if sort.name in self.sorts:
            raise ValueError(f"sort {sort.name!r} declared twice")
        self.sorts[sort.name] = sort
        for c in sort.constants:
            self.add_fun(FunDecl(c, (), sort.name, SUBSTRATE))

    def add_fun(self, d: FunDecl) -> None:
        self._check_fresh(d.name)
        for s in d.args + (d.result,):
            if s not in self.sorts:
                raise SortError(f"unknown sort {s!r} in declaration of {d.name!r}")
        self.funs[d.name] = d

    def add_pred(self, d: PredDecl) -> None:
        self._check_fresh(d.name)
        for s in d.args:
            if s not in self.sorts:
                raise SortError(f"unknown sort {s!r} in declaration of {d.name!r}")
        self.preds[d.name] = d

    def sort_tag(self, sort: str) -> str:
        return self.sorts[sort].tag

    def is_substrate_sort(self, sort: str) -> bool:
        return self.sorts[sort].tag == SUBSTRATE

    def enum_constants(self, sort: str) -> tuple:
        return self.sorts[sort].constants

    def enumerated_sorts(self) -> dict[str, tuple]:
        return {n: s.constants for n, s in self.sorts.items() if s.is_enumerated}

    def fresh_name(self, base: str) -> str:
        if base not in self.funs and base not in self.preds:
            return base
        i = 1
        while f"{base}_{i}" in self.funs or f"{base}_{i}" in self.preds:
            i += 1
        return f"{base}_{i}"

    def mk_app(self, name: str, args: tuple = (), primed: bool = False) -> App:
        d = self.funs.get(name)
        if d is None:
            raise SortError(f"unknown function symbol {name!r}")
        if len(args) != len(d.args):
            raise SortError(f"{name} expects {len(d.args)} arguments, got {len(args)}")
        for i, (a, s) in enumerate(zip(args, d.args)):
            if a.sort != s:
                raise SortError(f"argument {i + 1} of {name} has sort {a.sort}, expected {s}")
        return App(name, tuple(args), d.result, primed)

    def mk_atom(self, name: str, args: tuple = (), primed: bool = False) -> Atom:
        d = self.preds.get(name)
        if d is None:
            raise SortError(f"unknown predicate symbol {name!r}")
        if len(args) != len(d.args):
            raise SortError(f"{name} expects {len(d.args)} arguments, got {len(args)}")
        for i, (a, s) in enumerate(zip(args, d.args)):
            if a.sort != s:
                raise SortError(f"argument {i + 1} of {name} has sort {a.sort}, expected {s}")
        return Atom(name, tuple(args), primed)

    def symbol_tag(self, name: str) -> Optional[str]:
        if name in self.funs:
            return self.funs[name].tag
        if name in self.preds:
            return self.preds[name].tag
        return None


def mk_eq(lhs: Term, rhs: Term) -> Eq:
    if lhs.sort != rhs.sort:
        raise SortError(f"equality between sorts {lhs.sort} and {rhs.sort}")
    return Eq(lhs, rhs)
