"""Universal workflow axioms decided by finite instantiation.

Each axiom is read as  forall x1..xn. M  with M quantifier-free.  Function
applications in M that contain variables act as triggers: they are matched
against the ground terms of the query, and every match yields an instance
with the remaining variables ranging over the query terms of their sort
(for enumerated sorts, over the domain constants).  An axiom with triggers
none of which matches contributes nothing.  New terms produced by
instances feed a bounded number of further rounds.
"""
from __future__ import annotations

import itertools
from typing import Mapping, Optional, Sequence

from ..errors import WF_AXIOM_SHAPE, Unsupported
from ..lang.system import Axiom
from ..logic.syntax import (
    And, App, Forall, Formula, Term, Var, formula_terms, is_quantifier_free, subterms, term_vars,
)
from ..logic.transform import nnf, substitute
from ..smt.ground import GroundSolver
from ..smt.model import Verdict
from .horn import match


def _split_universal(f: Formula, name: str) -> list[tuple[tuple[Var, ...], Formula]]:
    """Prenex universal pieces of an axiom, or Unsupported."""
    g = nnf(f)
    out = []

    def go(h: Formula, bound: tuple) -> None:
        if isinstance(h, Forall):
            go(h.body, bound + tuple(h.vars))
        elif isinstance(h, And) and not is_quantifier_free(h):
            for a in h.args:
                go(a, bound)
        elif is_quantifier_free(h):
            out.append((bound, h))
        else:
            raise Unsupported(WF_AXIOM_SHAPE, f"axiom {name} is not a universal sentence")

    go(g, ())
    return out


class _Schema:
    def __init__(self, name: str, vars_: tuple, matrix: Formula) -> None:
        self.name = name
        self.vars = vars_
        self.matrix = matrix
        trig: list[App] = []
        for t in formula_terms(matrix):
            for s in subterms(t):
                if isinstance(s, App) and s.args and term_vars(s) and s not in trig:
                    trig.append(s)
        self.triggers = trig


def _ground_subterms(fs: Sequence[Formula]) -> list[Term]:
    seen: dict[Term, None] = {}
    for f in fs:
        for t in formula_terms(f):
            for s in subterms(t):
                seen.setdefault(s, None)
    return list(seen)


class WfTheory:
    """One instantiation context.  Instances are valid consequences of the
    axioms, so they are kept across checks of the same context."""

    def __init__(
        self,
        axioms: Sequence[Axiom],
        domains: Optional[Mapping[str, Sequence[App]]] = None,
        rounds: int = 2,
    ) -> None:
        self.domains = {s: list(cs) for s, cs in (domains or {}).items()}
        self.rounds = rounds
        self.schemas: list[_Schema] = []
        for a in axioms:
            for vs, m in _split_universal(a.formula, a.name):
                self.schemas.append(_Schema(a.name, vs, m))
        self.solver = GroundSolver(self.domains)
        self.done: set[tuple] = set()
        self.instances: list[tuple[str, dict]] = []

    def _domain(self, sort: str, by_sort: dict[str, list[Term]]) -> list[Term]:
        if sort in self.domains:
            return self.domains[sort]
        return by_sort.get(sort, [])

    def instantiate(self, terms: Sequence[Term]) -> list[Formula]:
        """Add instances over the given ground terms; returns them."""
        universe = list(dict.fromkeys(terms))
        known = set(universe)
        produced: list[Formula] = []
        for _ in range(self.rounds):
            by_sort: dict[str, list[Term]] = {}
            for t in universe:
                by_sort.setdefault(t.sort, []).append(t)
            new: list[Formula] = []
            for si, sc in enumerate(self.schemas):
                for sub in self._substitutions(sc, universe, by_sort):
                    key = (si,) + tuple(sub[v] for v in sc.vars)
                    if key in self.done:
                        continue
                    self.done.add(key)
                    inst = substitute(sc.matrix, sub)
                    self.instances.append((sc.name, sub))
                    new.append(inst)
            if not new:
                break
            for inst in new:
                self.solver.add(inst)
            produced.extend(new)
            grown = False
            for t in _ground_subterms(new):
                if t not in known:
                    known.add(t)
                    universe.append(t)
                    grown = True
            if not grown:
                break
        return produced

    def _substitutions(self, sc: _Schema, universe: list[Term], by_sort: dict[str, list[Term]]):
        if not sc.vars:
            yield {}
            return
        partials: list[dict] = []
        if sc.triggers:
            for trig in sc.triggers:
                for t in universe:
                    if isinstance(t, App) and t.fun == trig.fun:
                        s = match(trig, t, {})
                        if s is not None:
                            partials.append(s)
        else:
            partials.append({})
        seen: set[tuple] = set()
        for p in partials:
            free = [v for v in sc.vars if v not in p]
            doms = [self._domain(v.sort, by_sort) for v in free]
            for combo in itertools.product(*doms):
                s = dict(p)
                s.update(zip(free, combo))
                key = tuple(s[v] for v in sc.vars)
                if key in seen:
                    continue
                seen.add(key)
                yield s

    def check(self, literals: Sequence[Formula], minimize: bool = True) -> Verdict:
        self.instantiate(_ground_subterms(literals) + [c for cs in self.domains.values() for c in cs])
        return self.solver.check(list(literals), minimize=minimize)


def instantiate_universal_axioms(
    axioms: Sequence[Axiom],
    query: Sequence[Formula],
    domains: Optional[Mapping[str, Sequence[App]]] = None,
    rounds: int = 1,
) -> list[Formula]:
    """Ground instances of the axioms over the subterms of the query."""
    th = WfTheory(axioms, domains, rounds)
    return th.instantiate(_ground_subterms(query) + [c for cs in th.domains.values() for c in cs])


def wf_theory_sat(
    literals: Sequence[Formula],
    axioms: Sequence[Axiom],
    domains: Optional[Mapping[str, Sequence[App]]] = None,
) -> Verdict:
    return WfTheory(axioms, domains).check(literals)
