"""Explicit-state oracle for small two-level systems.

States are concrete: Id is a small universe, enumerated sorts are their
constants, message sorts are free constructor terms, a network sort is the
finite powerset of messages (mty, ins, mem), and state predicates are
tables.  Derived policy predicates are rigid across a step: every table
closed under the rules for both the pre- and the post-state is a
candidate, as in first-order reading of the rules.  Transitions are run by
evaluating their guards and updates directly; no reduction to formulas is
involved.
"""
from __future__ import annotations

import itertools
from typing import Callable, Optional

from soverify.lang.system import ID_SORT, TwoLevelSystem
from soverify.logic.syntax import (
    PM, STATE_PRED, STATE_VAR, SUBSTRATE, WF, And, Atom, BoolConst, Eq, Exists, Forall, Formula,
    Iff, Implies, Not, Or, Term, Var, conj, exists, formula_terms, neg, term_vars,
)


class OracleScope(Exception):
    """The system uses a feature the oracle does not model."""


def _subsets(items: list) -> list[frozenset]:
    out = []
    for mask in range(1 << len(items)):
        out.append(frozenset(x for k, x in enumerate(items) if mask >> k & 1))
    return out


class State:
    __slots__ = ("vars", "tables")

    def __init__(self, vars_: dict, tables: dict) -> None:
        self.vars = vars_
        self.tables = tables

    def key(self) -> tuple:
        return (tuple(sorted(self.vars.items(), key=repr)), tuple(sorted(self.tables.items(), key=repr)))


class Ctx:
    __slots__ = ("pre", "post", "derived", "rigid")

    def __init__(self, pre: State, post: Optional[State], derived: dict, rigid: dict) -> None:
        self.pre = pre
        self.post = post
        self.derived = derived
        self.rigid = rigid


class StateOracle:
    def __init__(self, system: TwoLevelSystem, id_size: Optional[int] = None) -> None:
        self.system = system
        sig = system.sig
        self.sig = sig
        self.univ: dict[str, list] = {}
        self.rigid_consts: list[str] = []
        for name, s in sig.sorts.items():
            if s.is_enumerated:
                self.univ[name] = list(s.constants)
        if system.substrate.id_mode == "equiv":
            n = 2 if id_size is None else id_size
            self.univ[ID_SORT] = [f"e{k}" for k in range(n)]
            self.rigid_consts = [d.name for d in sig.funs.values()
                                 if d.tag == SUBSTRATE and not d.args and d.result == ID_SORT]
        self.set_sorts: dict[str, str] = {}
        self.constructors: dict[str, tuple] = {}
        for d in sig.funs.values():
            if d.tag != WF:
                continue
            if d.name == "ins":
                self.set_sorts[d.result] = d.args[0]
            elif d.name == "mty":
                pass
            elif d.args and all(a in self.univ for a in d.args):
                self.constructors[d.name] = d.args
            else:
                raise OracleScope(f"workflow function {d.name}")
        for d in sig.funs.values():
            if d.tag in (PM,) :
                raise OracleScope(f"policy function {d.name}")
        for msort in set(self.set_sorts.values()) | {sig.funs[c].result for c in self.constructors}:
            elems = []
            for c, args in self.constructors.items():
                if sig.funs[c].result == msort:
                    for combo in itertools.product(*(self.univ[a] for a in args)):
                        elems.append((c,) + combo)
            self.univ[msort] = elems
        for ssort, msort in self.set_sorts.items():
            self.univ[ssort] = _subsets(self.univ[msort])
        for d in sig.preds.values():
            if d.tag == WF and d.name != "mem":
                raise OracleScope(f"workflow predicate {d.name}")
        self.derived = [d.name for d in sig.preds.values() if d.tag == PM]
        self.derived_atoms = [
            (p,) + combo
            for p in self.derived
            for combo in itertools.product(*(self.univ[s] for s in sig.preds[p].args))
        ]
        self._cache: dict = {}
        self.rules = [(self._rule_vars(r), self.formula(r.head), [self.formula(b) for b in r.body])
                      for r in system.pm.rules]
        self._rule_instances: dict = {}

    # -------------------------------------------------------------- compilation

    def term(self, t: Term, post: bool = False) -> Callable:
        if isinstance(t, Var):
            name = t
            return lambda ctx, env: env[name]
        d = self.sig.funs[t.fun]
        primed = t.primed or post
        if d.tag == STATE_VAR:
            n = t.fun
            if primed:
                return lambda ctx, env: ctx.post.vars[n]
            return lambda ctx, env: ctx.pre.vars[n]
        if d.tag == SUBSTRATE and not d.args:
            if t.fun in self.rigid_consts:
                n = t.fun
                return lambda ctx, env: ctx.rigid[n]
            val = t.fun
            return lambda ctx, env: val
        if t.fun == "mty":
            return lambda ctx, env: frozenset()
        if t.fun == "ins":
            m, s = self.term(t.args[0], post), self.term(t.args[1], post)
            return lambda ctx, env: s(ctx, env) | {m(ctx, env)}
        if t.fun in self.constructors:
            f = t.fun
            parts = [self.term(a, post) for a in t.args]
            return lambda ctx, env: (f,) + tuple(p(ctx, env) for p in parts)
        raise OracleScope(f"term {t.fun}")

    def formula(self, f: Formula, post: bool = False) -> Callable:
        if isinstance(f, BoolConst):
            v = f.value
            return lambda ctx, env: v
        if isinstance(f, Eq):
            a, b = self.term(f.lhs, post), self.term(f.rhs, post)
            return lambda ctx, env: a(ctx, env) == b(ctx, env)
        if isinstance(f, Atom):
            args = [self.term(a, post) for a in f.args]
            p = f.pred
            if p == "mem":
                m, s = args
                return lambda ctx, env: m(ctx, env) in s(ctx, env)
            d = self.sig.preds[p]
            if d.tag == STATE_PRED:
                if f.primed or post:
                    return lambda ctx, env: tuple(a(ctx, env) for a in args) in ctx.post.tables[p]
                return lambda ctx, env: tuple(a(ctx, env) for a in args) in ctx.pre.tables[p]
            if d.tag == PM:
                return lambda ctx, env: (p,) + tuple(a(ctx, env) for a in args) in ctx.derived
            raise OracleScope(f"predicate {p}")
        if isinstance(f, Not):
            g = self.formula(f.arg, post)
            return lambda ctx, env: not g(ctx, env)
        if isinstance(f, And):
            gs = [self.formula(a, post) for a in f.args]
            return lambda ctx, env: all(g(ctx, env) for g in gs)
        if isinstance(f, Or):
            gs = [self.formula(a, post) for a in f.args]
            return lambda ctx, env: any(g(ctx, env) for g in gs)
        if isinstance(f, Implies):
            a, b = self.formula(f.lhs, post), self.formula(f.rhs, post)
            return lambda ctx, env: (not a(ctx, env)) or b(ctx, env)
        if isinstance(f, Iff):
            a, b = self.formula(f.lhs, post), self.formula(f.rhs, post)
            return lambda ctx, env: a(ctx, env) == b(ctx, env)
        if isinstance(f, (Forall, Exists)):
            vs = f.vars
            body = self.formula(f.body, post)
            unis = [self.univ[v.sort] for v in vs]
            q = all if isinstance(f, Forall) else any

            def run(ctx, env):
                def gen():
                    for combo in itertools.product(*unis):
                        e = dict(env)
                        e.update(zip(vs, combo))
                        yield body(ctx, e)
                return q(gen())
            return run
        raise TypeError(f)

    def _rule_vars(self, r) -> list:
        seen = {}
        for lit in (r.head,) + tuple(r.body):
            for v in _vars(lit):
                seen.setdefault(v, None)
        return list(seen)

    # -------------------------------------------------------------- enumeration

    def rigid_assignments(self):
        for combo in itertools.product(self.univ[ID_SORT], repeat=len(self.rigid_consts)) if self.rigid_consts else [()]:
            yield dict(zip(self.rigid_consts, combo))

    def states(self):
        sig = self.sig
        var_doms = [self.univ[sig.funs[x].result] for x in self.system.state_vars]
        pred_doms = []
        for p in self.system.state_preds:
            cells = list(itertools.product(*(self.univ[s] for s in sig.preds[p].args)))
            pred_doms.append(_subsets(cells))
        for vals in itertools.product(*var_doms):
            for tabs in itertools.product(*pred_doms):
                yield State(dict(zip(self.system.state_vars, vals)), dict(zip(self.system.state_preds, tabs)))

    def closed(self, derived: frozenset, states: list, rigid: dict) -> bool:
        for st in states:
            ctx = Ctx(st, None, derived, rigid)
            for vs, head, body in self.rules:
                for combo in itertools.product(*(self.univ[v.sort] for v in vs)):
                    env = dict(zip(vs, combo))
                    if all(b(ctx, env) for b in body) and not head(ctx, env):
                        return False
        return True

    def derived_tables(self, states: list, rigid: dict):
        for d in _subsets(self.derived_atoms):
            if self.closed(d, states, rigid):
                yield d

    def witnesses(self, tau):
        vs = list(tau.witnesses)
        for combo in itertools.product(*(self.univ[v.sort] for v in vs)):
            yield dict(zip(vs, combo))

    def step(self, tau, ctx: Ctx, env: dict) -> State:
        sig = self.sig
        vars_ = dict(ctx.pre.vars)
        for x, t in tau.wf_updates:
            vars_[x] = self._compiled_term(t)(ctx, env)
        tables = dict(ctx.pre.tables)
        for p, u in tau.pm_updates:
            body = self._compiled_formula(u.body)
            cells = itertools.product(*(self.univ[s] for s in sig.preds[p].args))
            rows = []
            for cell in cells:
                e = dict(env)
                e.update(zip(u.params, cell))
                if body(ctx, e):
                    rows.append(cell)
            tables[p] = frozenset(rows)
        return State(vars_, tables)

    def _compiled_term(self, t):
        k = ("t", t)
        if k not in self._cache:
            self._cache[k] = self.term(t)
        return self._cache[k]

    def _compiled_formula(self, f, post: bool = False):
        k = ("f", f, post)
        if k not in self._cache:
            self._cache[k] = self.formula(f, post)
        return self._cache[k]

    # -------------------------------------------------------------- questions

    def triple_valid(self, pre: Formula, tau_name: str, post: Formula) -> bool:
        """No pre-state, witness and derived tables give pre, the guard and
        a post-state falsifying post."""
        return self.find_step(pre, tau_name, post) is None

    def find_step(self, pre: Formula, tau_name: str, post: Formula):
        tau = self.system.transition(tau_name)
        fpre = self._compiled_formula(pre)
        fguard = self._compiled_formula(tau.guard)
        fpost = self._compiled_formula(post, True)
        for rigid in self.rigid_assignments():
            for st in self.states():
                for d in self.derived_tables([st], rigid):
                    ctx = Ctx(st, None, d, rigid)
                    if not fpre(ctx, {}):
                        continue
                    for w in self.witnesses(tau):
                        if not fguard(ctx, w):
                            continue
                        nxt = self.step(tau, ctx, w)
                        ctx2 = Ctx(st, nxt, d, rigid)
                        if fpost(ctx2, {}):
                            continue
                        if self.closed(d, [nxt], rigid):
                            return st, w, nxt, d
        return None

    def state_sat(self, f: Formula) -> bool:
        """Some state and derived tables satisfy f."""
        g = self._compiled_formula(f)
        for rigid in self.rigid_assignments():
            for st in self.states():
                for d in self.derived_tables([st], rigid):
                    if g(Ctx(st, None, d, rigid), {}):
                        return True
        return False

    def reachable(self, limit: int = 20000) -> list[tuple[dict, State]]:
        """(rigid constants, state) pairs reachable from a state satisfying
        the initial condition, breadth first."""
        finit = self._compiled_formula(self.system.init.formula())
        out = []
        for rigid in self.rigid_assignments():
            seen: dict = {}
            frontier = []
            for st in self.states():
                if any(finit(Ctx(st, None, d, rigid), {}) for d in self.derived_tables([st], rigid)):
                    seen[st.key()] = st
                    frontier.append(st)
            while frontier:
                nxt_frontier = []
                for st in frontier:
                    for tau in self.system.transitions:
                        fguard = self._compiled_formula(tau.guard)
                        for d in self.derived_tables([st], rigid):
                            ctx = Ctx(st, None, d, rigid)
                            for w in self.witnesses(tau):
                                if not fguard(ctx, w):
                                    continue
                                nxt = self.step(tau, ctx, w)
                                if nxt.key() not in seen and self.closed(d, [nxt], rigid):
                                    seen[nxt.key()] = nxt
                                    nxt_frontier.append(nxt)
                                    if len(seen) > limit:
                                        raise OracleScope("state space too large")
                frontier = nxt_frontier
            out.extend((rigid, st) for st in seen.values())
        return out

    def holds_everywhere(self, f: Formula, rigid: dict, st: State) -> bool:
        g = self._compiled_formula(f)
        return all(g(Ctx(st, None, d, rigid), {}) for d in self.derived_tables([st], rigid))

    def enabled(self, pre: Formula, tau_name: str) -> bool:
        tau = self.system.transition(tau_name)
        return self.state_sat(conj(pre, exists(tau.witnesses, tau.guard)))


def _vars(f: Formula) -> list:
    out = []
    for t in formula_terms(f):
        for v in sorted(term_vars(t), key=lambda v: v.name):
            if v not in out:
                out.append(v)
    return out


def preservation_valid(system: TwoLevelSystem, psi: Formula, tau: str, max_ids: int = 2) -> bool:
    """psi is preserved by tau over every Id universe of size 1..max_ids."""
    for n in range(1, max_ids + 1):
        o = StateOracle(system, n)
        if not o.triple_valid(psi, tau, psi):
            return False
    return True


def initiation_valid(system: TwoLevelSystem, psi: Formula, max_ids: int = 2) -> bool:
    f = conj(system.init.formula(), neg(psi))
    return not any(StateOracle(system, n).state_sat(f) for n in range(1, max_ids + 1))


def implication_valid(system: TwoLevelSystem, psi: Formula, phi: Formula, max_ids: int = 2) -> bool:
    f = conj(psi, neg(phi))
    return not any(StateOracle(system, n).state_sat(f) for n in range(1, max_ids + 1))
