"""Ground satisfiability modulo equality and enumerated domains.

A GroundSolver owns one Boolean search (Dpll) and one congruence closure.
Formulas are Tseitin-encoded; atoms and equalities become theory variables
that the closure tracks incrementally.  Every term of an enumerated sort
gets the clause  t = c1 or ... or t = cn  and the domain constants are
pairwise distinct labels, which together give the finite-domain reading.
"""
from __future__ import annotations

from typing import Callable, Iterable, Mapping, Optional, Sequence

from ..errors import NOT_GROUND, Unsupported
from ..logic.printer import pretty_formula, pretty_term
from ..logic.syntax import App, Atom, BoolConst, Eq, Formula, Or, Term, Var, formula_terms, is_ground
from .cc import CongruenceClosure
from .model import SAT, UNSAT, Model, Verdict
from .sat import Dpll
from .tseitin import Tseitin


def _tkey(t: Term) -> str:
    return pretty_term(t)


def norm_eq(e: Eq) -> Formula:
    """Orient an equality canonically; t = t becomes TRUE."""
    if e.lhs == e.rhs:
        return BoolConst(True)
    if _tkey(e.lhs) > _tkey(e.rhs):
        return Eq(e.rhs, e.lhs)
    return e


class _Hook:
    def __init__(self, gs: "GroundSolver") -> None:
        self.gs = gs

    def is_theory_var(self, v: int) -> bool:
        return v in self.gs.theory_info

    def assert_lit(self, lit: int) -> Optional[list[int]]:
        cc = self.gs.cc
        info = self.gs.theory_info[abs(lit)]
        if info[0] == "eq":
            if lit > 0:
                conf = cc.merge(info[1], info[2], lit)
            else:
                conf = cc.assert_diseq(info[1], info[2], lit)
        else:
            conf = cc.merge(info[1], cc.true if lit > 0 else cc.false, lit)
        return None if conf is None else sorted(conf, key=abs)

    def checkpoint(self) -> int:
        return self.gs.cc.checkpoint()

    def backtrack(self, mark: int) -> None:
        self.gs.cc.backtrack(mark)

    def final_check(self) -> Optional[list[int]]:
        return None


class GroundSolver:
    """Incremental context: permanent formulas plus per-check assumptions."""

    def __init__(self, domains: Optional[Mapping[str, Sequence[App]]] = None) -> None:
        self.domains = {s: list(cs) for s, cs in (domains or {}).items()}
        self.sat = Dpll()
        self.cc = CongruenceClosure()
        self.node_of: dict[Term, int] = {}
        self.var_of: dict[Formula, int] = {}
        self.atom_of_var: dict[int, Formula] = {}
        self.theory_info: dict[int, tuple] = {}
        self.tseitin = Tseitin(self.sat, self._atom_lit)
        self._pending_exhaustive: list[Term] = []
        self._domain_ready: set[str] = set()
        self.asserted: list[Formula] = []
        self.hook = _Hook(self)

    # -------------------------------------------------------------- registration

    def term_node(self, t: Term) -> int:
        n = self.node_of.get(t)
        if n is not None:
            return n
        if isinstance(t, Var):
            raise Unsupported(NOT_GROUND, f"variable {t.name} in ground query")
        if t.sort in self.domains and t.sort not in self._domain_ready:
            self._domain_ready.add(t.sort)
            for c in self.domains[t.sort]:
                cn = self.cc.add_node(("f", c.fun, c.primed), (), c)
                self.node_of[c] = cn
                self.cc.set_distinct(cn)
            if t in self.node_of:
                return self.node_of[t]
        args = tuple(self.term_node(a) for a in t.args)
        n = self.cc.add_node(("f", t.fun, t.primed), args, t)
        self.node_of[t] = n
        if t.sort in self.domains and t not in self.domains[t.sort]:
            self._pending_exhaustive.append(t)
        return n

    def _flush_exhaustive(self) -> None:
        while self._pending_exhaustive:
            t = self._pending_exhaustive.pop(0)
            lits = [self.encode(Eq(t, c)) for c in self.domains[t.sort]]
            self.sat.add_clause(lits)

    def atom_var(self, a: Formula) -> int:
        v = self.var_of.get(a)
        if v is not None:
            return v
        if isinstance(a, Eq):
            ln, rn = self.term_node(a.lhs), self.term_node(a.rhs)
            v = self.sat.new_var()
            self.theory_info[v] = ("eq", ln, rn)
        else:
            args = tuple(self.term_node(t) for t in a.args)
            n = self.cc.add_node(("p", a.pred, a.primed), args, a)
            v = self.sat.new_var()
            self.theory_info[v] = ("pred", n)
        self.var_of[a] = v
        self.atom_of_var[v] = a
        self.sat.decision_order.append(v)
        return v

    def _atom_lit(self, f: Formula) -> int:
        if isinstance(f, Eq):
            g = norm_eq(f)
            return self.encode(g) if isinstance(g, BoolConst) else self.atom_var(g)
        return self.atom_var(f)

    def encode(self, f: Formula) -> int:
        """Literal equivalent to f (Tseitin)."""
        return self.tseitin.encode(f)

    # -------------------------------------------------------------- asserting

    def _register(self, f: Formula) -> None:
        # terms inside trivially true equalities still belong in the model
        for t in formula_terms(f):
            self.term_node(t)

    def add(self, f: Formula) -> None:
        self._register(f)
        self.sat.add_clause([self.encode(f)])
        self.asserted.append(f)

    def add_clause(self, lits: Iterable[Formula]) -> None:
        lits = list(lits)
        for l in lits:
            self._register(l)
        self.sat.add_clause([self.encode(l) for l in lits])
        self.asserted.append(Or(tuple(lits)) if len(lits) != 1 else lits[0])

    # -------------------------------------------------------------- solving

    def check(self, assumptions: Sequence[Formula] = (), minimize: bool = False) -> Verdict:
        assumptions = list(assumptions)
        for a in assumptions:
            self._register(a)
        lits = [self.encode(a) for a in assumptions]
        self._flush_exhaustive()
        res = self.sat.solve(lits, theory=self.hook)
        if res.sat:
            model = self.extract_model()
            self.sat.reset()
            if __debug__:
                for f in assumptions + self.asserted:
                    assert model.eval(f), f"model falsifies {pretty_formula(f)}"
            return Verdict(SAT, model=model, stats=dict(self.sat.stats))
        core = [a for a, l in zip(assumptions, lits) if l in res.core]
        core = list(dict.fromkeys(core))
        if minimize and len(core) > 1:
            core = minimize_core(lambda fs: self._unsat_core(fs), core)
        return Verdict(UNSAT, core=tuple(core), stats=dict(self.sat.stats))

    def _unsat_core(self, fs: list[Formula]) -> Optional[list[Formula]]:
        lits = [self.encode(a) for a in fs]
        self._flush_exhaustive()
        res = self.sat.solve(lits, theory=self.hook)
        if res.sat:
            self.sat.reset()
            return None
        return [a for a, l in zip(fs, lits) if l in res.core]

    def extract_model(self) -> Model:
        """Quotient model of the current (total) assignment."""
        cc = self.cc
        names: dict[int, str] = {}
        counters: dict[str, int] = {}
        universe: dict[str, list[str]] = {}
        for s, cs in self.domains.items():
            if s in self._domain_ready:
                universe[s] = [c.fun for c in cs]
        terms = sorted(self.node_of.items(), key=lambda kv: kv[1])
        for t, n in terms:
            r = cc.find(n)
            if r in names:
                continue
            lab = cc.label[r]
            if lab is not None and t.sort in self.domains:
                names[r] = cc.obj[lab].fun
            else:
                k = counters.get(t.sort, 0)
                counters[t.sort] = k + 1
                names[r] = f"{t.sort}!{k}"
                universe.setdefault(t.sort, []).append(names[r])
        model = Model(universe=universe)
        for t, n in terms:
            key = (t.fun, t.primed)
            args = tuple(names[cc.find(self.node_of[a])] for a in t.args)
            tab = model.funs.setdefault(key, {})
            val = names[cc.find(n)]
            assert tab.get(args, val) == val, "congruence violated in model"
            tab[args] = val
        for v, a in self.atom_of_var.items():
            if isinstance(a, Atom):
                n = self.theory_info[v][1]
                r = cc.find(n)
                if r == cc.find(cc.true):
                    val = True
                elif r == cc.find(cc.false):
                    val = False
                else:
                    continue
                args = tuple(names[cc.find(self.node_of[t])] for t in a.args)
                tab = model.preds.setdefault((a.pred, a.primed), {})
                assert tab.get(args, val) == val, "predicate congruence violated in model"
                tab[args] = val
        return model


def minimize_core(
    unsat_core: Callable[[list], Optional[list]], core: list
) -> list:
    """Greedy drop-one minimization.  unsat_core(fs) returns a subset of fs
    that is unsatisfiable, or None if fs is satisfiable."""
    cur = list(core)
    i = 0
    while i < len(cur):
        trial = cur[:i] + cur[i + 1:]
        sub = unsat_core(trial)
        if sub is None:
            i += 1
        else:
            keep = set(sub)
            cur = [c for c in trial if c in keep]
    return cur


def solve_ground(
    f: Formula, domains: Optional[Mapping[str, Sequence[App]]] = None
) -> Verdict:
    if not is_ground(f):
        raise Unsupported(NOT_GROUND, pretty_formula(f))
    gs = GroundSolver(domains)
    gs.add(f)
    return gs.check()


def congruence_close(
    literals: Sequence[Formula], domains: Optional[Mapping[str, Sequence[App]]] = None
) -> Verdict:
    """Consistency of a set of ground literals; the core is minimized."""
    gs = GroundSolver(domains)
    return gs.check(list(literals), minimize=True)
