"""Substitution, update reduction, skolemization and finite instantiation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from ..errors import (
    NESTED_QUANTIFIER, NON_ID_QUANTIFIER, RecursiveUpdateError, UnmappedPrimeError, Unsupported,
)
from .syntax import (
    FALSE, PM, SUBSTRATE, TRUE, WF, And, App,
    Atom, BoolConst, Eq, Exists, Forall, Formula, FunDecl, Iff, Implies, Not, Or, Signature, SortError,
    Term, Var, all_vars, conj, disj, free_vars, has_primes, neg, term_vars,
)


# ---------------------------------------------------------------- substitution


def subst_term(t: Term, m: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return m.get(t, t)
    if not t.args:
        return t
    return App(t.fun, tuple(subst_term(a, m) for a in t.args), t.sort, t.primed)


def _fresh_var(v: Var, avoid: set[str]) -> Var:
    i = 1
    while f"{v.name}_{i}" in avoid:
        i += 1
    return Var(f"{v.name}_{i}", v.sort)


def substitute(f: Formula, m: Mapping[Var, Term]) -> Formula:
    """Capture-avoiding simultaneous substitution of free variables."""
    for v, t in m.items():
        if v.sort != t.sort:
            raise SortError(f"substituting {t} of sort {t.sort} for {v.name}:{v.sort}")
    return _subst(f, dict(m))


def _subst(f: Formula, m: dict[Var, Term]) -> Formula:
    if not m:
        return f
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(a, m) for a in f.args), f.primed)
    if isinstance(f, Eq):
        return Eq(subst_term(f.lhs, m), subst_term(f.rhs, m))
    if isinstance(f, Not):
        return Not(_subst(f.arg, m))
    if isinstance(f, And):
        return And(tuple(_subst(a, m) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_subst(a, m) for a in f.args))
    if isinstance(f, Implies):
        return Implies(_subst(f.lhs, m), _subst(f.rhs, m))
    if isinstance(f, Iff):
        return Iff(_subst(f.lhs, m), _subst(f.rhs, m))
    if isinstance(f, (Forall, Exists)):
        inner = {v: t for v, t in m.items() if v not in f.vars}
        if not inner:
            return f
        body_free = free_vars(f.body)
        inner = {v: t for v, t in inner.items() if v in body_free}
        if not inner:
            return f
        range_vars: set[Var] = set()
        for t in inner.values():
            range_vars |= term_vars(t)
        new_vars = []
        avoid = {v.name for v in all_vars(f.body)} | {v.name for v in range_vars}
        for v in f.vars:
            if v in range_vars:
                nv = _fresh_var(v, avoid)
                avoid.add(nv.name)
                inner[v] = nv
                new_vars.append(nv)
            else:
                new_vars.append(v)
        return type(f)(tuple(new_vars), _subst(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- generic mapping


def map_atoms(f: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Rebuild f with every atom or equality replaced by fn(atom)."""
    if isinstance(f, (Atom, Eq)):
        return fn(f)
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Implies):
        return Implies(map_atoms(f.lhs, fn), map_atoms(f.rhs, fn))
    if isinstance(f, Iff):
        return Iff(map_atoms(f.lhs, fn), map_atoms(f.rhs, fn))
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.vars, map_atoms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def map_terms(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    """Apply fn bottom-up to every term occurrence."""

    def tmap(t: Term) -> Term:
        if isinstance(t, App) and t.args:
            t = App(t.fun, tuple(tmap(a) for a in t.args), t.sort, t.primed)
        return fn(t)

    def amap(a: Formula) -> Formula:
        if isinstance(a, Atom):
            return Atom(a.pred, tuple(tmap(x) for x in a.args), a.primed)
        return Eq(tmap(a.lhs), tmap(a.rhs))

    return map_atoms(f, amap)


# ---------------------------------------------------------------- priming


def prime_formula(f: Formula, state_vars: Iterable[str], state_preds: Iterable[str]) -> Formula:
    """Mark every occurrence of the given state symbols as primed."""
    sv, sp = set(state_vars), set(state_preds)

    def tfn(t: Term) -> Term:
        if isinstance(t, App) and not t.args and t.fun in sv:
            return App(t.fun, (), t.sort, True)
        return t

    g = map_terms(f, tfn)

    def afn(a: Formula) -> Formula:
        if isinstance(a, Atom) and a.pred in sp:
            return Atom(a.pred, a.args, True)
        return a

    return map_atoms(g, afn)


@dataclass(frozen=True)
class PredicateUpdate:
    """A lambda-abstraction z1..zn. body defining a post-state predicate."""

    params: tuple
    body: Formula

    def apply(self, args: tuple) -> Formula:
        if len(args) != len(self.params):
            raise SortError(f"update arity {len(self.params)} applied to {len(args)} arguments")
        return substitute(self.body, dict(zip(self.params, args)))


def apply_updates(
    f: Formula,
    wf_updates: Mapping[str, Term],
    pm_updates: Mapping[str, PredicateUpdate],
) -> Formula:
    """Replace primed state variables by their update terms and beta-reduce
    primed state predicates through their update definitions."""
    for name, t in wf_updates.items():
        if _term_has_prime(t):
            raise RecursiveUpdateError(f"update term for {name} mentions a primed symbol")
    for name, u in pm_updates.items():
        if has_primes(u.body):
            raise RecursiveUpdateError(f"update definition for {name} mentions a primed symbol")

    def tfn(t: Term) -> Term:
        if isinstance(t, App) and t.primed:
            if t.fun not in wf_updates:
                raise UnmappedPrimeError(f"no update for primed state variable {t.fun}")
            return wf_updates[t.fun]
        return t

    g = map_terms(f, tfn)

    def afn(a: Formula) -> Formula:
        if isinstance(a, Atom) and a.primed:
            if a.pred not in pm_updates:
                raise UnmappedPrimeError(f"no update for primed state predicate {a.pred}")
            return pm_updates[a.pred].apply(a.args)
        return a

    return map_atoms(g, afn)


def _term_has_prime(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return t.primed or any(_term_has_prime(a) for a in t.args)


# ---------------------------------------------------------------- skolemization


def skolem_tag(sig: Signature, sort: str) -> str:
    tag = sig.sort_tag(sort)
    return SUBSTRATE if tag == SUBSTRATE else (PM if tag == PM else WF)


def skolemize_outer_existentials(
    f: Formula,
    sig: Signature,
    namer: Optional[Callable[[Var], str]] = None,
) -> tuple[Formula, list[FunDecl]]:
    """Replace existentials in top-level positive conjunctive position by fresh
    constants.  Returns the new formula and the declarations of the constants;
    the caller extends its signature with them."""
    taken: set[str] = set()
    decls: list[FunDecl] = []

    def fresh(v: Var) -> App:
        base = namer(v) if namer else f"sk.{v.name}"
        name = base
        i = 1
        while name in sig.funs or name in sig.preds or name in taken:
            name = f"{base}_{i}"
            i += 1
        taken.add(name)
        decls.append(FunDecl(name, (), v.sort, skolem_tag(sig, v.sort)))
        return App(name, (), v.sort)

    def go(g: Formula) -> Formula:
        if isinstance(g, Exists):
            m = {v: fresh(v) for v in g.vars}
            return go(substitute(g.body, m))
        if isinstance(g, And):
            return conj(*(go(a) for a in g.args))
        return g

    return go(f), decls


# ---------------------------------------------------------------- finite instantiation


def ground_instantiate(f: Formula, reps: Mapping[str, Iterable[Term]]) -> Formula:
    """Expand a universal formula with quantifier-free matrix into the
    conjunction of its instances over the representative terms of each sort."""
    if not isinstance(f, Forall):
        return f
    if not _qf(f.body):
        raise Unsupported(NESTED_QUANTIFIER, "matrix of universal formula is not quantifier-free")
    domains = []
    for v in f.vars:
        if v.sort not in reps:
            raise Unsupported(NON_ID_QUANTIFIER, f"no representatives for sort {v.sort} of {v.name}")
        d = list(reps[v.sort])
        if not d:
            raise ValueError(f"empty representative set for sort {v.sort}")
        domains.append(d)
    parts = [substitute(f.body, dict(zip(f.vars, combo))) for combo in itertools.product(*domains)]
    return conj(*parts)


def _qf(f: Formula) -> bool:
    from .syntax import is_quantifier_free

    return is_quantifier_free(f)


def expand_finite_quantifiers(f: Formula, domains: Mapping[str, Iterable[Term]]) -> Formula:
    """Replace quantifiers over enumerated sorts by finite conjunctions and
    disjunctions.  Quantifiers over other sorts are left in place."""
    if isinstance(f, (Atom, Eq, BoolConst)):
        return f
    if isinstance(f, Not):
        return neg(expand_finite_quantifiers(f.arg, domains))
    if isinstance(f, And):
        return conj(*(expand_finite_quantifiers(a, domains) for a in f.args))
    if isinstance(f, Or):
        return disj(*(expand_finite_quantifiers(a, domains) for a in f.args))
    if isinstance(f, Implies):
        return Implies(expand_finite_quantifiers(f.lhs, domains), expand_finite_quantifiers(f.rhs, domains))
    if isinstance(f, Iff):
        return Iff(expand_finite_quantifiers(f.lhs, domains), expand_finite_quantifiers(f.rhs, domains))
    if isinstance(f, (Forall, Exists)):
        fin = [v for v in f.vars if v.sort in domains]
        rest = tuple(v for v in f.vars if v.sort not in domains)
        body = expand_finite_quantifiers(f.body, domains)
        if fin:
            parts = [
                substitute(body, dict(zip(fin, combo)))
                for combo in itertools.product(*(list(domains[v.sort]) for v in fin))
            ]
            body = conj(*parts) if isinstance(f, Forall) else disj(*parts)
        if rest:
            return type(f)(rest, body)
        return body
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- normal forms


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form; implications and equivalences are expanded."""
    if isinstance(f, BoolConst):
        return f if positive else neg(f)
    if isinstance(f, (Atom, Eq)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.lhs), f.rhs)), positive)
    if isinstance(f, Iff):
        both = And((f.lhs, f.rhs))
        neither = And((Not(f.lhs), Not(f.rhs)))
        if positive:
            return nnf(Or((both, neither)))
        return nnf(Or((And((f.lhs, Not(f.rhs))), And((Not(f.lhs), f.rhs)))))
    if isinstance(f, Forall):
        return Forall(f.vars, nnf(f.body, True)) if positive else Exists(f.vars, nnf(f.body, False))
    if isinstance(f, Exists):
        return Exists(f.vars, nnf(f.body, True)) if positive else Forall(f.vars, nnf(f.body, False))
    raise TypeError(f"not a formula: {f!r}")


def dnf(f: Formula, limit: int = 4096) -> list[list[Formula]]:
    """Disjunctive normal form of a quantifier-free formula as a list of
    literal lists.  Trivially false cubes are dropped."""
    g = nnf(f)

    def go(h: Formula) -> list[list[Formula]]:
        if h == TRUE:
            return [[]]
        if h == FALSE:
            return []
        if isinstance(h, Or):
            out: list[list[Formula]] = []
            for a in h.args:
                out.extend(go(a))
            return out
        if isinstance(h, And):
            out = [[]]
            for a in h.args:
                nxt = []
                for c1 in out:
                    for c2 in go(a):
                        nxt.append(c1 + c2)
                        if len(nxt) > limit:
                            raise ValueError("DNF blow-up")
                out = nxt
            return out
        if isinstance(h, (Forall, Exists)):
            raise ValueError("dnf of a quantified formula")
        return [[h]]

    cubes = []
    for cube in go(g):
        lits: list[Formula] = []
        ok = True
        for lit in cube:
            if _trivially_false(lit):
                ok = False
                break
            if _trivially_true(lit) or lit in lits:
                continue
            if neg(lit) in lits:
                ok = False
                break
            lits.append(lit)
        if ok and lits not in cubes:
            cubes.append(lits)
    return cubes


def _trivially_true(lit: Formula) -> bool:
    return isinstance(lit, Eq) and lit.lhs == lit.rhs


def _trivially_false(lit: Formula) -> bool:
    return isinstance(lit, Not) and isinstance(lit.arg, Eq) and lit.arg.lhs == lit.arg.rhs


def simplify(f: Formula) -> Formula:
    """Cheap constant folding and flattening."""
    if isinstance(f, Eq):
        return TRUE if f.lhs == f.rhs else f
    if isinstance(f, (Atom, BoolConst)):
        return f
    if isinstance(f, Not):
        return neg(simplify(f.arg))
    if isinstance(f, And):
        return conj(*(simplify(a) for a in f.args))
    if isinstance(f, Or):
        return disj(*(simplify(a) for a in f.args))
    if isinstance(f, Implies):
        return disj(neg(simplify(f.lhs)), simplify(f.rhs))
    if isinstance(f, Iff):
        a, b = simplify(f.lhs), simplify(f.rhs)
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        if a == FALSE:
            return neg(b)
        if b == FALSE:
            return neg(a)
        if a == b:
            return TRUE
        return Iff(a, b)
    if isinstance(f, (Forall, Exists)):
        body = simplify(f.body)
        if isinstance(body, BoolConst):
            return body
        return type(f)(f.vars, body)
    raise TypeError(f"not a formula: {f!r}")


def prenex_universal(f: Formula) -> Formula:
    """Pull universal quantifiers out of conjunctions and disjunctions of
    the negation normal form, renaming bound variables apart.  Existentials
    stay where they are, so a caller can still spot them."""
    taken: set[str] = {v.name for v in free_vars(f)}
    hoisted: list[Var] = []

    def go(h: Formula) -> Formula:
        if isinstance(h, Forall):
            m = {}
            for v in h.vars:
                w = v
                if v.name in taken:
                    w = _fresh_var(v, taken | {x.name for x in all_vars(h)})
                    m[v] = w
                taken.add(w.name)
                hoisted.append(w)
            return go(substitute(h.body, m) if m else h.body)
        if isinstance(h, And):
            return conj(*(go(a) for a in h.args))
        if isinstance(h, Or):
            return disj(*(go(a) for a in h.args))
        return h

    body = go(nnf(f))
    return Forall(tuple(hoisted), body) if hoisted else body
