"""Satisfiability of ground two-level formulas by lazy theory combination.

The purified formula is abstracted into a Boolean skeleton whose atoms are
extended with interface-equality atoms over the shared constants.  Each
total Boolean assignment is split into its workflow and policy slices;
both engines check their slice.  A rejected slice contributes its
(minimized) conflict as a learned clause; when both accept, the two models
are merged on the shared constants.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..errors import EXISTENTIAL, NESTED_QUANTIFIER, NON_ID_QUANTIFIER, Unsupported
from ..lang.system import ID_SORT, Rule, TwoLevelSystem
from ..logic.printer import pretty_formula, pretty_term
from ..logic.syntax import (
    PM, SUBSTRATE, WF, And, App, Atom, BoolConst, Eq, Exists, Forall, Formula, FunDecl, Not,
    Or, Signature, Term, conj, disj, formula_terms, is_ground, is_quantifier_free, iter_formulas, subterms,
)
from ..logic.transform import ground_instantiate, nnf, prenex_universal, simplify
from ..smt.ground import minimize_core, norm_eq
from ..smt.model import SAT, UNSAT, UNSUPPORTED, Model, Verdict
from ..smt.sat import Dpll
from ..smt.tseitin import Tseitin
from ..theories.horn import pm_theory_sat
from ..theories.wf import WfTheory
from .purify import SUB, pred_home, purify, term_home


@dataclass
class TheoryContext:
    """Everything the combination loop needs besides the formula."""

    sig: Signature
    wf_axioms: tuple = ()
    pm_rules: tuple = ()
    mode: str = "edt"
    horn_depth: Optional[int] = None
    domains: dict = field(default_factory=dict)

    @classmethod
    def from_system(
        cls,
        system: TwoLevelSystem,
        sig: Optional[Signature] = None,
        extra_rules: Sequence[Rule] = (),
        mode: Optional[str] = None,
        horn_depth: Optional[int] = None,
    ) -> "TheoryContext":
        mode = mode or system.substrate.id_mode
        depth = horn_depth if horn_depth is not None else (
            system.pm.depth if system.pm.mode == "horn" else None
        )
        s = sig or system.sig
        doms = {k: v for k, v in _domains(s).items() if mode == "edt" or k != ID_SORT}
        return cls(s, tuple(system.wf_axioms), tuple(system.pm.rules) + tuple(extra_rules), mode, depth, doms)

    def with_sig(self, sig: Signature) -> "TheoryContext":
        return TheoryContext(sig, self.wf_axioms, self.pm_rules, self.mode, self.horn_depth,
                             {k: v for k, v in _domains(sig).items() if k in self.domains})


def _domains(sig: Signature) -> dict[str, list[App]]:
    return {s: [App(c, (), s) for c in cs] for s, cs in sig.enumerated_sorts().items()}


# ---------------------------------------------------------------- helpers


def _rule_constants(rules: Sequence[Rule]) -> list[App]:
    out: dict[App, None] = {}
    for r in rules:
        for lit in (r.head,) + tuple(r.body):
            for t in formula_terms(lit):
                for s in subterms(t):
                    if isinstance(s, App) and not s.args:
                        out.setdefault(s, None)
    return list(out)


def _lit(atom: Formula, value: bool) -> Formula:
    return atom if value else Not(atom)


class _Trace:
    def __init__(self, sink: Optional[Callable[[str], None]]) -> None:
        self.sink = sink

    def emit(self, **rec) -> None:
        if self.sink is not None:
            self.sink(json.dumps(rec, sort_keys=True))


# ---------------------------------------------------------------- main loop


def tsoa_sat(
    f: Formula,
    ctx: TheoryContext,
    trace: Optional[Callable[[str], None]] = None,
    max_iterations: int = 100000,
) -> Verdict:
    """Decide a ground formula.  trace, when given, receives one JSON line
    per loop iteration."""
    if not is_ground(f) or not is_quantifier_free(f):
        raise ValueError("tsoa_sat expects a ground quantifier-free formula")
    sig = ctx.sig
    pq = purify(simplify(f), sig)
    if pq.decls:
        sig = sig.extended(pq.decls)
    tr = _Trace(trace)

    # ------------------------------------------------------------ atoms
    sat = Dpll()
    atoms: list[Formula] = []
    var_of: dict[Formula, int] = {}
    home: dict[Formula, str] = {}

    def atom_lit(a: Formula) -> int:
        if isinstance(a, Eq):
            g = norm_eq(a)
            if isinstance(g, BoolConst):
                return ts.encode(g)
            a = g
        v = var_of.get(a)
        if v is None:
            v = sat.new_var()
            var_of[a] = v
            atoms.append(a)
            sat.decision_order.append(v)
        return v

    ts = Tseitin(sat, atom_lit)
    for a, h in pq.atom_home.items():
        key = norm_eq(a) if isinstance(a, Eq) else a
        if isinstance(key, BoolConst):
            continue
        home[key] = h
    sat.add_clause([ts.encode(pq.formula)])
    for d in pq.definitions:
        sat.add_clause([ts.encode(d)])

    # ------------------------------------------------------------ interface equalities
    pm_consts: dict[App, None] = {}
    for a, h in home.items():
        if h in (PM, SUB):
            for t in formula_terms(a):
                for s in subterms(t):
                    if isinstance(s, App) and not s.args and sig.is_substrate_sort(s.sort):
                        pm_consts.setdefault(s, None)
    for c in _rule_constants(ctx.pm_rules):
        if sig.is_substrate_sort(c.sort):
            pm_consts.setdefault(c, None)
    ie_atoms: list[Eq] = []
    ie_consts: list[App] = []
    for c in pm_consts:
        dom = ctx.domains.get(c.sort)
        if dom is not None and c in dom:
            continue
        ie_consts.append(c)
    if ctx.mode == "edt":
        for c in ie_consts:
            dom = ctx.domains.get(c.sort)
            if dom is None:
                continue
            lits = []
            for d in dom:
                e = norm_eq(Eq(c, d))
                lits.append(atom_lit(e))
                home[e] = SUB
                ie_atoms.append(e)
            sat.add_clause(lits)
            for x, y in itertools.combinations(lits, 2):
                sat.add_clause([-x, -y])
    else:
        by_sort: dict[str, list[App]] = {}
        for c in ie_consts:
            by_sort.setdefault(c.sort, []).append(c)
        for s, cs in by_sort.items():
            if s in ctx.domains:
                for c in cs:
                    lits = []
                    for d in ctx.domains[s]:
                        e = norm_eq(Eq(c, d))
                        lits.append(atom_lit(e))
                        home[e] = SUB
                        ie_atoms.append(e)
                    sat.add_clause(lits)
                    for x, y in itertools.combinations(lits, 2):
                        sat.add_clause([-x, -y])
                continue
            for x, y in itertools.combinations(cs, 2):
                e = norm_eq(Eq(x, y))
                if isinstance(e, BoolConst):
                    continue
                atom_lit(e)
                home[e] = SUB
                ie_atoms.append(e)
    if __debug__:
        for e in ie_atoms:
            if ctx.mode == "edt":
                assert any(
                    t in ctx.domains.get(t.sort, ()) for t in (e.lhs, e.rhs)
                ), "edt interface atom must mention a domain constant"
    for a in atoms:
        home.setdefault(a, _guess_home(sig, a))

    # ------------------------------------------------------------ engines
    wf = WfTheory(ctx.wf_axioms, ctx.domains)
    distinct = [c for cs in ctx.domains.values() for c in cs]
    wf_cache: dict[frozenset, Verdict] = {}
    pm_cache: dict[frozenset, Verdict] = {}

    def check_wf(slice_: list[Formula]) -> Verdict:
        key = frozenset(slice_)
        hit = wf_cache.get(key)
        if hit is None:
            hit = wf.check(slice_, minimize=True)
            wf_cache[key] = hit
        return hit

    def pm_once(lits: list[Formula]) -> Verdict:
        return pm_theory_sat(lits, ctx.pm_rules, ctx.horn_depth, distinct)

    def check_pm(slice_: list[Formula]) -> Verdict:
        key = frozenset(slice_)
        hit = pm_cache.get(key)
        if hit is None:
            hit = pm_once(slice_)
            if hit.status == UNSAT and len(hit.core) > 1:
                def sub(fs):
                    try:
                        r = pm_once(fs)
                    except Unsupported:
                        return None  # the dropped literal is needed to decide
                    if r.status == UNSAT:
                        return list(r.core)
                    return None
                core = minimize_core(sub, list(hit.core))
                hit = Verdict(UNSAT, core=tuple(core), stats=hit.stats)
            pm_cache[key] = hit
        return hit

    iterations = 0
    learned = 0
    while True:
        iterations += 1
        if iterations > max_iterations:
            raise RuntimeError("combination loop exceeded its iteration budget")
        res = sat.solve()
        if not res.sat:
            tr.emit(iteration=iterations, result="exhausted")
            return Verdict(UNSAT, stats={"iterations": iterations, "learned": learned, "atoms": len(atoms)})
        model = res.model
        sat.reset()
        wf_slice: list[Formula] = []
        pm_slice: list[Formula] = []
        for a in atoms:
            lit = _lit(a, model[var_of[a]])
            h = home[a]
            if h in (WF, SUB):
                wf_slice.append(lit)
            if h in (PM, SUB):
                pm_slice.append(lit)
        vw = check_wf(wf_slice)
        if vw.status == UNSUPPORTED:
            return vw
        vp = check_pm(pm_slice) if vw.status == SAT else None
        if vp is not None and vp.status == UNSUPPORTED:
            tr.emit(iteration=iterations, wf=vw.status, pm=vp.status, reason=vp.reason)
            return vp
        clauses = []
        for v in (vw, vp):
            if v is not None and v.status == UNSAT:
                clause = []
                for lit in v.core:
                    a = lit.arg if isinstance(lit, Not) else lit
                    key = norm_eq(a) if isinstance(a, Eq) else a
                    var = var_of[key]
                    clause.append(var if isinstance(lit, Not) else -var)
                assert all(model[abs(l)] != (l > 0) for l in clause), "learned clause must block the assignment"
                clauses.append(clause)
        tr.emit(
            iteration=iterations,
            assignment=[pretty_formula(_lit(a, model[var_of[a]])) for a in atoms],
            wf=vw.status,
            pm=None if vp is None else vp.status,
            learned=[[pretty_formula(_lit(atoms_by_var(atoms, var_of, abs(l)), l > 0)) for l in c] for c in clauses],
        )
        if not clauses:
            merged = _merge_models(vw.model, vp.model, ie_consts)
            if __debug__:
                assert merged.eval(pq.formula), "merged model falsifies the purified query"
            v = Verdict(SAT, model=merged, stats={"iterations": iterations, "learned": learned, "atoms": len(atoms)})
            v.stats["purified"] = {pretty_term(c): pretty_term(pq.origin[c]) for c in pq.shared}
            return v
        for c in clauses:
            sat.add_clause(c)
            learned += 1


def atoms_by_var(atoms: list[Formula], var_of: dict, v: int) -> Formula:
    for a in atoms:
        if var_of[a] == v:
            return a
    raise KeyError(v)


def _guess_home(sig: Signature, a: Formula) -> str:
    if isinstance(a, Atom):
        return pred_home(sig, a.pred)
    hs = {term_home(sig, a.lhs), term_home(sig, a.rhs)} - {SUB}
    return hs.pop() if len(hs) == 1 else (SUB if not hs else WF)


def _merge_models(mw: Model, mp: Model, shared: Sequence[App]) -> Model:
    """Rename the policy model's elements so that shared constants take the
    workflow model's values, then take the union of the tables."""
    ren: dict[str, str] = {}
    for c in shared:
        key = (c.fun, c.primed)
        if () in mw.funs.get(key, {}) and () in mp.funs.get(key, {}):
            pv, wv = mp.funs[key][()], mw.funs[key][()]
            if ren.get(pv, wv) != wv:
                raise AssertionError("interface constants disagree between theory models")
            ren[pv] = wv
    for es in mp.universe.values():
        for e in es:
            if e not in ren and not _is_domain_elem(e):
                ren[e] = f"{e}.pm"
    return mw.merged(mp.renamed(ren))


def _is_domain_elem(e: str) -> bool:
    return "!" not in e


# ---------------------------------------------------------------- universal fragment


def representatives(f: Formula, sig: Signature, extra: Sequence[Term] = ()) -> list[App]:
    """Id constants occurring in f and extra terms; a fresh one if none."""
    out: dict[App, None] = {}
    for t in list(formula_terms(f)) + list(extra):
        for s in subterms(t):
            if isinstance(s, App) and not s.args and s.sort == ID_SORT:
                out.setdefault(s, None)
    return list(out)


def tsoa_sat_universal(
    f: Formula,
    ctx: TheoryContext,
    extra_reps: Sequence[Term] = (),
    trace: Optional[Callable[[str], None]] = None,
) -> Verdict:
    """Decide a conjunction of ground parts and universal parts whose
    quantifiers range over Id (or enumerated sorts) with quantifier-free
    matrices, by instantiation over representative Id constants."""
    sig = ctx.sig
    parts = [prenex_universal(p) for p in (f.args if isinstance(f, And) else [f])]
    for p in parts:
        _check_universal_part(p, ctx)
    reps = representatives(f, sig, list(extra_reps) + _rule_constants(ctx.pm_rules))
    if ID_SORT in ctx.domains:
        reps = list(ctx.domains[ID_SORT])
    elif not reps:
        name = sig.fresh_name("rep")
        sig = sig.extended([FunDecl(name, (), ID_SORT, SUBSTRATE)])
        reps = [App(name, (), ID_SORT)]
        ctx = ctx.with_sig(sig)
    domains = {ID_SORT: reps}
    for s, cs in ctx.domains.items():
        domains[s] = cs
    ground_parts = []
    for p in parts:
        ground_parts.append(_instantiate(p, domains))
    g = conj(*ground_parts)
    v = tsoa_sat(g, ctx, trace=trace)
    v.stats["representatives"] = [r.fun for r in reps]
    return v


def _check_universal_part(p: Formula, ctx: TheoryContext) -> None:
    g = nnf(p)
    for h in iter_formulas(g):
        if isinstance(h, Exists):
            raise Unsupported(EXISTENTIAL, f"existential quantifier in {pretty_formula(p)}")
        if isinstance(h, Forall):
            for v in h.vars:
                if v.sort != ID_SORT and v.sort not in ctx.domains:
                    raise Unsupported(NON_ID_QUANTIFIER, f"quantifier over sort {v.sort}")
            if not is_quantifier_free(h.body) and not isinstance(h.body, Forall):
                raise Unsupported(NESTED_QUANTIFIER, f"nested quantifier in {pretty_formula(p)}")


def _instantiate(p: Formula, domains: dict) -> Formula:
    g = nnf(p)

    def go(h: Formula) -> Formula:
        if isinstance(h, Forall):
            return conj(*(go(x) for x in _conjuncts(ground_instantiate(_flatten(h), domains))))
        if isinstance(h, And):
            return conj(*(go(a) for a in h.args))
        if isinstance(h, (Not, Atom, Eq, BoolConst)):
            return h
        if is_quantifier_free(h):
            return h
        if isinstance(h, Or):
            return disj(*(go(a) for a in h.args))
        raise Unsupported(NESTED_QUANTIFIER, pretty_formula(h))

    return go(g)


def _flatten(h: Forall) -> Forall:
    vs = list(h.vars)
    body = h.body
    while isinstance(body, Forall):
        vs += list(body.vars)
        body = body.body
    return Forall(tuple(vs), body)


def _conjuncts(f: Formula) -> list[Formula]:
    return list(f.args) if isinstance(f, And) else [f]
