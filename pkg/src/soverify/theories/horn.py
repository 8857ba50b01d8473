"""Bottom-up Horn saturation for the policy theory.

Facts may contain variables (rules whose head has variables that do not
occur in the body, e.g. wildcards).  Ground subterms are kept in a
canonical form chosen from a congruence closure over the input
equalities, so syntactic unification on canonical terms respects the
equalities of the query.  Every fact carries the set of input literals
it depends on, which is what makes conflicts explainable.

Negative literals are integrity constraints: a query is unsatisfiable when
saturation derives (an instance covering) an atom that is asserted false.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import HORN_DEPTH, UNDECIDED_DISEQUALITY, SoverifyError, Unsupported
from ..lang.system import Rule
from ..logic.printer import pretty_formula, pretty_term
from ..logic.syntax import (
    App, Atom, BoolConst, Eq, Formula, Not, Term, Var, term_depth, term_size,
)
from ..smt.cc import CongruenceClosure
from ..smt.model import SAT, UNSAT, Model, Verdict


class NotDatalog(SoverifyError):
    """A function symbol occurs where only Datalog is accepted."""


# ---------------------------------------------------------------- unification


def _walk(t: Term, s: dict) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def _occurs(v: Var, t: Term, s: dict) -> bool:
    t = _walk(t, s)
    if t == v:
        return True
    if isinstance(t, App):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def unify(a: Term, b: Term, s: dict) -> Optional[dict]:
    a, b = _walk(a, s), _walk(b, s)
    if a == b:
        return s
    if isinstance(a, Var):
        if a.sort != b.sort or _occurs(a, b, s):
            return None
        return {**s, a: b}
    if isinstance(b, Var):
        return unify(b, a, s)
    if a.fun != b.fun or a.primed != b.primed or len(a.args) != len(b.args):
        return None
    for x, y in zip(a.args, b.args):
        s = unify(x, y, s)
        if s is None:
            return None
    return s


def match(pattern: Term, t: Term, s: dict) -> Optional[dict]:
    """One-way matching: only variables of pattern are bound."""
    if isinstance(pattern, Var):
        if pattern in s:
            return s if s[pattern] == t else None
        if pattern.sort != t.sort:
            return None
        return {**s, pattern: t}
    if not isinstance(t, App) or pattern.fun != t.fun or pattern.primed != t.primed:
        return None
    if len(pattern.args) != len(t.args):
        return None
    for x, y in zip(pattern.args, t.args):
        s = match(x, y, s)
        if s is None:
            return None
    return s


def resolve(t: Term, s: dict) -> Term:
    t = _walk(t, s)
    if isinstance(t, App) and t.args:
        return App(t.fun, tuple(resolve(a, s) for a in t.args), t.sort, t.primed)
    return t


def _atom_vars(a: Atom) -> set[Var]:
    out: set[Var] = set()

    def go(t: Term) -> None:
        if isinstance(t, Var):
            out.add(t)
        else:
            for x in t.args:
                go(x)

    for t in a.args:
        go(t)
    return out


def _rename(a: Atom, tag: str) -> Atom:
    vs = _atom_vars(a)
    if not vs:
        return a
    m = {v: Var(f"{v.name}#{tag}", v.sort) for v in vs}
    return Atom(a.pred, tuple(resolve(t, m) for t in a.args), a.primed)


def _has_fun(t: Term) -> bool:
    return isinstance(t, App) and bool(t.args)


# ---------------------------------------------------------------- facts


@dataclass
class Fact:
    atom: Atom
    support: frozenset
    rule: str
    premises: tuple = ()

    @property
    def ground(self) -> bool:
        return not _atom_vars(self.atom)


@dataclass
class FactBase:
    facts: list[Fact] = field(default_factory=list)
    pruned: int = 0

    def ground_atoms(self) -> set[Atom]:
        return {f.atom for f in self.facts if f.ground}

    def find(self, goal: Atom) -> Optional[int]:
        for i, f in enumerate(self.facts):
            if f.atom.pred != goal.pred or f.atom.primed != goal.primed:
                continue
            s: Optional[dict] = {}
            for p, t in zip(f.atom.args, goal.args):
                s = match(p, t, s)
                if s is None:
                    break
            if s is not None:
                return i
        return None

    def derivation(self, i: int) -> dict:
        f = self.facts[i]
        return {
            "atom": pretty_formula(f.atom),
            "rule": f.rule,
            "premises": [self.derivation(j) for j in f.premises],
        }


class _Conflict(Exception):
    def __init__(self, support: frozenset, fact: Optional[int] = None) -> None:
        self.support = support
        self.fact = fact


# ---------------------------------------------------------------- engine


class HornEngine:
    """Saturation of rules plus input literals.

    depth: maximal depth of terms in derived facts (None for unbounded);
    distinct: constants that are pairwise distinct (enumerated domains).
    """

    def __init__(
        self,
        rules: Sequence[Rule],
        depth: Optional[int] = None,
        distinct: Iterable[App] = (),
        max_facts: int = 200000,
    ) -> None:
        self.rules = list(rules)
        self.depth = depth
        self.max_facts = max_facts
        self.cc = CongruenceClosure()
        self.node_of: dict[Term, int] = {}
        self.members: dict[int, list[int]] = {}
        self._rep: dict[int, Term] = {}
        self._norm: dict[Term, tuple[Term, frozenset]] = {}
        self.distinct_nodes: set[int] = set()
        for c in distinct:
            n = self._node(c)
            self.cc.set_distinct(n)
            self.distinct_nodes.add(n)
        self.diseqs: list[tuple[int, int, Formula]] = []
        self.fb = FactBase()
        self._ground_index: dict[Atom, int] = {}
        self._open_by_pred: dict[tuple, list[int]] = {}
        self._by_pred: dict[tuple, list[int]] = {}
        self.negatives: dict[tuple, list[tuple[Atom, frozenset]]] = {}
        self._counter = itertools.count()

    # -------------------------------------------------------------- terms

    def _node(self, t: Term) -> int:
        n = self.node_of.get(t)
        if n is not None:
            return n
        args = tuple(self._node(a) for a in t.args)
        n = self.cc.add_node(("f", t.fun, t.primed), args, t)
        self.node_of[t] = n
        self.members.setdefault(self.cc.find(n), []).append(n)
        return n

    def _rep_of(self, root: int) -> Term:
        hit = self._rep.get(root)
        if hit is not None:
            return hit
        objs = [self.cc.obj[n] for n in self.members.get(root, [])]
        consts = [o for o in objs if not o.args]
        if consts:
            lab = self.cc.label[root]
            rep = self.cc.obj[lab] if lab is not None else min(consts, key=lambda o: o.fun)
        else:
            best = min(objs, key=lambda o: (term_size(o), pretty_term(o)))
            rep = App(best.fun, tuple(self.canon(a)[0] for a in best.args), best.sort, best.primed)
        self._rep[root] = rep
        self._node(rep)
        return rep

    def canon(self, t: Term) -> tuple[Term, frozenset]:
        """Canonical form of t and the input literals justifying t = form."""
        if isinstance(t, Var):
            return t, frozenset()
        hit = self._norm.get(t)
        if hit is not None:
            return hit
        args = []
        ex: set = set()
        ground = True
        for a in t.args:
            a2, e = self.canon(a)
            args.append(a2)
            ex |= e
            ground = ground and not isinstance(a2, Var) and a2 in self.node_of
        t2 = App(t.fun, tuple(args), t.sort, t.primed) if t.args else t
        if t2.args and not ground:
            # open term: keep structure, ground arguments already canonical
            res = (t2, frozenset(ex))
            return res
        n = self._node(t2)
        rep = self._rep_of(self.cc.find(n))
        if rep != t2:
            ex |= self.cc.explain(n, self._node(rep))
        res = (rep, frozenset(ex))
        self._norm[t] = res
        return res

    def canon_atom(self, a: Atom) -> tuple[Atom, frozenset]:
        args = []
        ex: set = set()
        for t in a.args:
            t2, e = self.canon(t)
            args.append(t2)
            ex |= e
        return Atom(a.pred, tuple(args), a.primed), frozenset(ex)

    def _same_class(self, a: Term, b: Term) -> bool:
        if _atom_vars(Atom("_", (a, b))):
            return False
        return self.cc.find(self._node(a)) == self.cc.find(self._node(b))

    def _distinct_reason(self, a: Term, b: Term) -> Optional[frozenset]:
        na, nb = self._node(a), self._node(b)
        ra, rb = self.cc.find(na), self.cc.find(nb)
        la, lb = self.cc.label[ra], self.cc.label[rb]
        if la is not None and lb is not None and la != lb:
            return frozenset(self.cc.explain(na, la) | self.cc.explain(nb, lb))
        for x, y, lit in self.diseqs:
            rx, ry = self.cc.find(x), self.cc.find(y)
            if (rx, ry) == (ra, rb):
                return frozenset(self.cc.explain(na, x) | self.cc.explain(nb, y) | {lit})
            if (rx, ry) == (rb, ra):
                return frozenset(self.cc.explain(na, y) | self.cc.explain(nb, x) | {lit})
        return None

    # -------------------------------------------------------------- loading

    def load(self, literals: Sequence[Formula]) -> Optional[frozenset]:
        """Register input literals.  Returns a conflict set if the
        equalities alone are inconsistent."""
        atoms: list[tuple[Formula, Atom]] = []
        negs: list[tuple[Formula, Atom]] = []
        for lit in literals:
            pos = not isinstance(lit, Not)
            a = lit.arg if isinstance(lit, Not) else lit
            if isinstance(a, BoolConst):
                if a.value != pos:
                    return frozenset({lit})
                continue
            if isinstance(a, Eq):
                x, y = self._node(a.lhs), self._node(a.rhs)
                if pos:
                    conf = self.cc.merge(x, y, lit)
                else:
                    conf = self.cc.assert_diseq(x, y, lit)
                    self.diseqs.append((x, y, lit))
                if conf is not None:
                    return frozenset(conf)
            elif pos:
                for t in a.args:
                    self._node(t)
                atoms.append((lit, a))
            else:
                for t in a.args:
                    self._node(t)
                negs.append((lit, a))
        self.members = {}
        for t, n in self.node_of.items():
            self.members.setdefault(self.cc.find(n), []).append(n)
        for lit, a in negs:
            ca, ex = self.canon_atom(a)
            self.negatives.setdefault((a.pred, a.primed), []).append((ca, ex | {lit}))
        try:
            for lit, a in atoms:
                ca, ex = self.canon_atom(a)
                self._add(ca, ex | {lit}, "input", ())
        except _Conflict as c:
            return c.support
        return None

    # -------------------------------------------------------------- facts

    def _add(self, atom: Atom, support: frozenset, rule: str, premises: tuple) -> Optional[int]:
        key = (atom.pred, atom.primed)
        ground = not _atom_vars(atom)
        if ground:
            if atom in self._ground_index:
                return None
        if self.depth is not None and any(term_depth(t) > self.depth for t in atom.args):
            self.fb.pruned += 1
            return None
        for j in self._open_by_pred.get(key, []):
            g = self.fb.facts[j].atom
            s: Optional[dict] = {}
            for p, t in zip(g.args, atom.args):
                s = match(p, t, s)
                if s is None:
                    break
            if s is not None:
                return None  # subsumed
        if len(self.fb.facts) >= self.max_facts:
            raise Unsupported(HORN_DEPTH, f"saturation exceeded {self.max_facts} facts")
        i = len(self.fb.facts)
        self.fb.facts.append(Fact(atom, support, rule, premises))
        self._by_pred.setdefault(key, []).append(i)
        if ground:
            self._ground_index[atom] = i
        else:
            self._open_by_pred.setdefault(key, []).append(i)
        for neg_atom, nsup in self.negatives.get(key, []):
            s = {}
            for p, t in zip(atom.args, neg_atom.args):
                s = match(p, t, s)
                if s is None:
                    break
            if s is not None:
                raise _Conflict(support | nsup, i)
        return i

    def _prepared_rules(self) -> list[tuple]:
        out = []
        for r in self.rules:
            ex: set = set()
            tag = r.name

            def prep_atom(a: Atom) -> Atom:
                args = []
                for t in a.args:
                    t2, e = self.canon(t)
                    ex.update(e)
                    args.append(t2)
                return Atom(a.pred, tuple(args), a.primed)

            head = prep_atom(r.head)
            pos: list[Atom] = []
            cons: list[tuple[bool, Term, Term]] = []
            for b in r.body:
                polarity = not isinstance(b, Not)
                inner = b.arg if isinstance(b, Not) else b
                if isinstance(inner, Atom):
                    if not polarity:
                        raise Unsupported(UNDECIDED_DISEQUALITY, f"negated atom in body of rule {r.name}")
                    pos.append(prep_atom(inner))
                elif isinstance(inner, Eq):
                    l, e1 = self.canon(inner.lhs)
                    rr, e2 = self.canon(inner.rhs)
                    ex.update(e1)
                    ex.update(e2)
                    cons.append((polarity, l, rr))
                elif isinstance(inner, BoolConst):
                    if inner.value != polarity:
                        pos = None  # never fires
                        break
            if pos is None:
                continue
            out.append((tag, head, pos, cons, frozenset(ex)))
        return out

    def _instantiate(self, t: Term, s: dict) -> tuple[Term, frozenset]:
        return self.canon(resolve(t, s))

    def saturate(self) -> Optional[frozenset]:
        """Run to fixpoint.  Returns a conflict support set or None."""
        rules = self._prepared_rules()
        try:
            for tag, head, pos, cons, ex in rules:
                if not pos:
                    self._fire(tag, head, [], cons, ex, {}, frozenset(), (), 0)
            given = 0
            while given < len(self.fb.facts):
                g = self.fb.facts[given]
                gkey = (g.atom.pred, g.atom.primed)
                for tag, head, pos, cons, ex in rules:
                    for i, b in enumerate(pos):
                        if (b.pred, b.primed) != gkey:
                            continue
                        ga = _rename(g.atom, str(next(self._counter)))
                        s: Optional[dict] = {}
                        for p, t in zip(b.args, ga.args):
                            s = unify(p, t, s)
                            if s is None:
                                break
                        if s is None:
                            continue
                        rest = pos[:i] + pos[i + 1:]
                        self._join(tag, head, rest, cons, ex, s, g.support, (given,), given, i)
                given += 1
        except _Conflict as c:
            self.conflict_fact = c.fact
            return c.support
        self.conflict_fact = None
        return None

    def _join(self, tag, head, rest, cons, ex, s, support, prem, limit, pivot) -> None:
        if not rest:
            self._fire(tag, head, [], cons, ex, s, support, prem, pivot)
            return
        b = rest[0]
        for j in self._by_pred.get((b.pred, b.primed), []):
            if j > limit:
                break
            f = self.fb.facts[j]
            fa = _rename(f.atom, str(next(self._counter)))
            s2: Optional[dict] = s
            for p, t in zip(b.args, fa.args):
                s2 = unify(p, t, s2)
                if s2 is None:
                    break
            if s2 is None:
                continue
            self._join(tag, head, rest[1:], cons, ex, s2, support | f.support, prem + (j,), limit, pivot)

    def _fire(self, tag, head, rest, cons, ex, s, support, prem, pivot) -> None:
        # the triggering fact came first; put premises back in body order
        prem = prem[1:pivot + 1] + prem[:1] + prem[pivot + 1:]
        sup = set(support) | ex
        for polarity, l, r in cons:
            lt, e1 = self._instantiate(l, s)
            rt, e2 = self._instantiate(r, s)
            if polarity:
                s2 = unify(lt, rt, s)
                if s2 is None:
                    return
                s = s2
                sup |= e1 | e2
            else:
                if lt == rt or self._same_class(lt, rt):
                    return
                if _atom_vars(Atom("_", (lt, rt))):
                    raise Unsupported(UNDECIDED_DISEQUALITY, f"unbound variable in disequality of rule {tag}")
                why = self._distinct_reason(lt, rt)
                if why is None:
                    raise Unsupported(
                        UNDECIDED_DISEQUALITY,
                        f"rule {tag} needs {pretty_term(lt)} != {pretty_term(rt)}, which the query leaves open",
                    )
                sup |= e1 | e2 | why
        args = []
        for t in head.args:
            t2, e = self._instantiate(t, s)
            args.append(t2)
            sup |= e
        atom = Atom(head.pred, tuple(args), head.primed)
        atom = _normalize_vars(atom)
        self._add(atom, frozenset(sup), tag, prem)

    # -------------------------------------------------------------- models

    def model(self) -> Model:
        names: dict[int, str] = {}
        counters: dict[str, int] = {}
        universe: dict[str, list[str]] = {}
        items = sorted(self.node_of.items(), key=lambda kv: kv[1])
        for t, n in items:
            r = self.cc.find(n)
            if r in names:
                continue
            lab = self.cc.label[r]
            if lab is not None:
                names[r] = self.cc.obj[lab].fun
            else:
                k = counters.get(t.sort, 0)
                counters[t.sort] = k + 1
                names[r] = f"{t.sort}!{k}"
            universe.setdefault(t.sort, []).append(names[r])
        m = Model(universe=universe)
        for t, n in items:
            args = tuple(names[self.cc.find(self.node_of[a])] for a in t.args)
            m.funs.setdefault((t.fun, t.primed), {})[args] = names[self.cc.find(n)]
        for f in self.fb.facts:
            if not f.ground or not all(a in self.node_of for a in f.atom.args):
                continue
            args = tuple(names[self.cc.find(self.node_of[a])] for a in f.atom.args)
            m.preds.setdefault((f.atom.pred, f.atom.primed), {})[args] = True
        return m


def _normalize_vars(a: Atom) -> Atom:
    vs = sorted(_atom_vars(a), key=lambda v: v.name)
    if not vs:
        return a
    m = {v: Var(f"?{i}", v.sort) for i, v in enumerate(vs)}
    return Atom(a.pred, tuple(resolve(t, m) for t in a.args), a.primed)


# ---------------------------------------------------------------- operations


def pm_theory_sat(
    literals: Sequence[Formula],
    rules: Sequence[Rule],
    depth: Optional[int] = None,
    distinct: Iterable[App] = (),
) -> Verdict:
    """Satisfiability of ground policy literals modulo the rules.

    Unsat carries the contributing input literals as core.  If the depth
    bound pruned some fact and no conflict was found, the answer is
    Unsupported: the bound makes 'no conflict' inconclusive."""
    eng = HornEngine(rules, depth, distinct)
    conf = eng.load(literals)
    if conf is None:
        conf = eng.saturate()
    if conf is not None:
        order = {lit: i for i, lit in enumerate(literals)}
        core = tuple(sorted(conf, key=lambda l: order.get(l, len(order))))
        v = Verdict(UNSAT, core=core)
        if eng.fb.facts and getattr(eng, "conflict_fact", None) is not None:
            v.stats["derivation"] = eng.fb.derivation(eng.conflict_fact)
        return v
    if eng.fb.pruned:
        return Verdict(
            "unsupported",
            reason=HORN_DEPTH,
            detail=f"{eng.fb.pruned} facts exceed term depth {depth}; no conflict within the bound",
        )
    return Verdict(SAT, model=eng.model(), stats={"facts": len(eng.fb.facts)})


def horn_derive(
    rules: Sequence[Rule], facts: Sequence[Atom], goal: Atom, k: int
) -> tuple[bool, Optional[dict], FactBase]:
    """Is goal derivable using terms of depth at most k?  Returns the
    verdict, a derivation tree when derivable, and the fact base."""
    eng = HornEngine(rules, k)
    eng.load(list(facts))
    eng.saturate()
    i = eng.fb.find(eng.canon_atom(goal)[0])
    if i is None:
        return False, None, eng.fb
    return True, eng.fb.derivation(i), eng.fb


def _ground_unsafe(rules: Sequence[Rule], constants: Mapping[str, Sequence[Term]]) -> list[Rule]:
    """Instantiate variables that no positive body atom binds with every
    constant of their sort, so derived facts and disequalities are ground."""
    out: list[Rule] = []
    for r in rules:
        bound: set[Var] = set()
        every: set[Var] = set(_atom_vars(r.head))
        for lit in r.body:
            a = lit.arg if isinstance(lit, Not) else lit
            if isinstance(a, Atom):
                every |= _atom_vars(a)
                if not isinstance(lit, Not):
                    bound |= _atom_vars(a)
            elif isinstance(a, Eq):
                every |= _atom_vars(Atom("_", (a.lhs, a.rhs)))
        free = sorted(every - bound, key=lambda v: v.name)
        if not free:
            out.append(r)
            continue
        for k, combo in enumerate(itertools.product(*(list(constants.get(v.sort, ())) for v in free))):
            m = dict(zip(free, combo))
            out.append(Rule(f"{r.name}.{k}", _subst_atom(r.head, m), tuple(_subst_lit(b, m) for b in r.body)))
    return out


def _subst_atom(a: Atom, m: dict) -> Atom:
    return Atom(a.pred, tuple(resolve(t, m) for t in a.args), a.primed)


def _subst_lit(lit: Formula, m: dict) -> Formula:
    if isinstance(lit, Not):
        return Not(_subst_lit(lit.arg, m))
    if isinstance(lit, Atom):
        return _subst_atom(lit, m)
    if isinstance(lit, Eq):
        return Eq(resolve(lit.lhs, m), resolve(lit.rhs, m))
    return lit


def datalog_saturate(
    rules: Sequence[Rule], facts: Sequence[Atom], constants: Mapping[str, Sequence[Term]]
) -> set[Atom]:
    """Least fixpoint over a finite constant universe.  Variables left in
    derived facts range over the constants of their sort."""
    for r in rules:
        for lit in (r.head,) + tuple(r.body):
            a = lit.arg if isinstance(lit, Not) else lit
            terms = a.args if isinstance(a, Atom) else ((a.lhs, a.rhs) if isinstance(a, Eq) else ())
            if any(_has_fun(t) for t in terms):
                raise NotDatalog(f"rule {r.name} uses a function symbol")
    for f in facts:
        if any(_has_fun(t) for t in f.args):
            raise NotDatalog(f"fact {pretty_formula(f)} uses a function symbol")
    distinct = [c for cs in constants.values() for c in cs]
    eng = HornEngine(_ground_unsafe(rules, constants), None, distinct)
    conf = eng.load(list(facts))
    assert conf is None
    eng.saturate()
    out: set[Atom] = set()
    for f in eng.fb.facts:
        vs = sorted(_atom_vars(f.atom), key=lambda v: v.name)
        if not vs:
            out.add(f.atom)
            continue
        for combo in itertools.product(*(list(constants.get(v.sort, ())) for v in vs)):
            m = dict(zip(vs, combo))
            out.add(Atom(f.atom.pred, tuple(resolve(t, m) for t in f.atom.args), f.atom.primed))
    return out
