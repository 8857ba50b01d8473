"""Brute-force oracles and seeded generators for the oracle-agreement tests.

Nothing here calls the decision procedures under test; the oracles only
use the syntax classes to read formulas.
"""
from __future__ import annotations

import itertools
import random

from soverify.lang.parser import parse_spec
from soverify.lang.system import Rule
from soverify.logic.syntax import (
    And, App, Atom, BoolConst, Eq, Formula, Iff, Implies, Not, Or, Term, Var,
)

# ---------------------------------------------------------------- ground mixed formulas

GROUND_MIX = """
(system GroundMix
  (substrate
    (enum Id a b c)
    (enum Role user admin))
  (wf
    (funs (x Id) (y Id) (g Id Id))
    (preds (w Id)))
  (pm
    (mode datalog)
    (funs (boss Id))
    (preds (p Id) (q Id Role))
    (rules
      (rule AdminIsP (p X) (q X admin))
      (rule PIsUser (q X user) (p X))
      (rule BossIsP (p boss))
      (rule PromoteOthers (q X admin) (p X) (q X user) (not (= X a))))))
"""

IDS = ("a", "b", "c")
ROLES = ("user", "admin")


def ground_mix_system():
    return parse_spec(GROUND_MIX).system()


def _pm_closure(facts: set) -> set:
    """Least fixpoint of the GroundMix rules over concrete atoms."""
    out = set(facts)
    while True:
        new = set()
        for (pred, *args) in out:
            if pred == "q" and args[1] == "admin":
                new.add(("p", args[0]))
            if pred == "p":
                new.add(("q", args[0], "user"))
                if args[0] != "a" and ("q", args[0], "user") in out:
                    new.add(("q", args[0], "admin"))
        if new <= out:
            return out
        out |= new


class GroundMixOracle:
    """Exhaustive search over interpretations of x, y, boss, g and w and
    rule-closed tables for p, q."""

    def __init__(self, f: Formula) -> None:
        self.f = f
        terms: dict[Term, None] = {}
        self._collect(f, terms)
        self.terms = sorted(terms, key=_depth)

    def _collect(self, f: Formula, terms: dict) -> None:
        if isinstance(f, (Atom, Eq)):
            args = f.args if isinstance(f, Atom) else (f.lhs, f.rhs)
            for t in args:
                self._collect_term(t, terms)
        elif isinstance(f, Not):
            self._collect(f.arg, terms)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                self._collect(a, terms)
        elif isinstance(f, (Implies, Iff)):
            self._collect(f.lhs, terms)
            self._collect(f.rhs, terms)

    def _collect_term(self, t: Term, terms: dict) -> None:
        for a in t.args:
            self._collect_term(a, terms)
        terms.setdefault(t, None)

    def _valuations(self):
        """Term values consistent with a single table for g."""
        order = self.terms
        base = {"x", "y", "boss"}

        def go(i: int, val: dict, gtab: dict, consts: dict):
            if i == len(order):
                yield dict(val), dict(consts)
                return
            t = order[i]
            if t.sort == "Role" or t.fun in IDS:
                val[t] = t.fun
                yield from go(i + 1, val, gtab, consts)
                del val[t]
                return
            if t.fun in base:
                if t.fun in consts:
                    val[t] = consts[t.fun]
                    yield from go(i + 1, val, gtab, consts)
                    del val[t]
                    return
                for v in IDS:
                    val[t] = v
                    consts[t.fun] = v
                    yield from go(i + 1, val, gtab, consts)
                    del consts[t.fun]
                    del val[t]
                return
            assert t.fun == "g"
            arg = val[t.args[0]]
            if arg in gtab:
                val[t] = gtab[arg]
                yield from go(i + 1, val, gtab, consts)
                del val[t]
                return
            for v in IDS:
                val[t] = v
                gtab[arg] = v
                yield from go(i + 1, val, gtab, consts)
                del gtab[arg]
                del val[t]

        return go(0, {}, {}, {})

    def sat(self) -> bool:
        for val, consts in self._valuations():
            boss = consts.get("boss")
            atoms: dict[tuple, None] = {}
            self._atoms(self.f, val, atoms)
            keys = list(atoms)
            for bits in itertools.product((False, True), repeat=len(keys)):
                tv = dict(zip(keys, bits))
                if not self._eval(self.f, val, tv):
                    continue
                pm_true = {k for k, b in tv.items() if b and k[0] in ("p", "q")}
                pm_false = {k for k, b in tv.items() if not b and k[0] in ("p", "q")}
                if boss is None:
                    # boss is unconstrained: any value works if one does
                    ok = any(not (_pm_closure(pm_true | {("p", v)}) & pm_false) for v in IDS)
                else:
                    ok = not (_pm_closure(pm_true | {("p", boss)}) & pm_false)
                if ok:
                    return True
        return False

    def _atoms(self, f: Formula, val: dict, out: dict) -> None:
        if isinstance(f, Atom):
            out.setdefault((f.pred,) + tuple(val[t] for t in f.args), None)
        elif isinstance(f, Not):
            self._atoms(f.arg, val, out)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                self._atoms(a, val, out)
        elif isinstance(f, (Implies, Iff)):
            self._atoms(f.lhs, val, out)
            self._atoms(f.rhs, val, out)

    def _eval(self, f: Formula, val: dict, tv: dict) -> bool:
        if isinstance(f, BoolConst):
            return f.value
        if isinstance(f, Atom):
            return tv[(f.pred,) + tuple(val[t] for t in f.args)]
        if isinstance(f, Eq):
            return val[f.lhs] == val[f.rhs]
        if isinstance(f, Not):
            return not self._eval(f.arg, val, tv)
        if isinstance(f, And):
            return all(self._eval(a, val, tv) for a in f.args)
        if isinstance(f, Or):
            return any(self._eval(a, val, tv) for a in f.args)
        if isinstance(f, Implies):
            return (not self._eval(f.lhs, val, tv)) or self._eval(f.rhs, val, tv)
        if isinstance(f, Iff):
            return self._eval(f.lhs, val, tv) == self._eval(f.rhs, val, tv)
        raise TypeError(f)


def _depth(t: Term) -> int:
    return 1 + max((_depth(a) for a in t.args), default=0)


def random_ground_mix(rng: random.Random) -> str:
    """A random quantifier-free formula over the GroundMix signature, as
    text.  Terms have nesting depth at most 2."""
    base = ["a", "b", "c", "x", "y", "boss"]
    # a small pool per formula makes shared terms (and conflicts) likely
    pool = rng.sample(base, 3)

    def term(depth: int) -> str:
        if depth > 0 and rng.random() < 0.45:
            return f"(g {term(depth - 1)})"
        return rng.choice(pool)

    def atom() -> str:
        k = rng.random()
        if k < 0.3:
            return f"(= {term(2)} {term(2)})"
        if k < 0.5:
            return f"(w {term(2)})"
        if k < 0.75:
            return f"(p {term(2)})"
        return f"(q {term(2)} {rng.choice(ROLES)})"

    def lit() -> str:
        a = atom()
        return f"(not {a})" if rng.random() < 0.45 else a

    def formula(d: int) -> str:
        if d == 0 or rng.random() < 0.25:
            return lit()
        op = rng.choices(["and", "or", "=>", "<=>", "not"], [5, 2, 1, 1, 1])[0]
        if op == "not":
            return f"(not {formula(d - 1)})"
        if op in ("=>", "<=>"):
            return f"({op} {formula(d - 1)} {formula(d - 1)})"
        n = rng.randint(2, 3)
        return f"({op} " + " ".join(formula(d - 1) for _ in range(n)) + ")"

    if rng.random() < 0.5:
        parts = [lit() if rng.random() < 0.7 else formula(1) for _ in range(rng.randint(3, 6))]
        return "(and " + " ".join(parts) + ")"
    return formula(3)


# ---------------------------------------------------------------- datalog


def naive_fixpoint(rules: list, facts: set, constants: dict) -> set:
    """Apply every ground instance of every rule until nothing changes.
    Atoms are tuples (pred, arg, ...), rule literals are
    ("atom", pred, args) with args given as ("var", name) or ("const", c),
    or ("neq", t1, t2)."""
    known = set(facts)
    while True:
        new = set()
        for head, body in rules:
            vs = sorted({a[1] for lit in [head] + body for a in _lit_args(lit) if a[0] == "var"})
            for combo in itertools.product(constants, repeat=len(vs)):
                env = dict(zip(vs, combo))
                if all(_holds(lit, env, known) for lit in body):
                    new.add(_ground(head, env))
        if new <= known:
            return known
        known |= new


def _lit_args(lit) -> list:
    if lit[0] == "atom":
        return list(lit[2])
    return [lit[1], lit[2]]


def _value(a, env):
    return env[a[1]] if a[0] == "var" else a[1]


def _ground(lit, env) -> tuple:
    return (lit[1],) + tuple(_value(a, env) for a in lit[2])


def _holds(lit, env, known) -> bool:
    if lit[0] == "atom":
        return _ground(lit, env) in known
    return _value(lit[1], env) != _value(lit[2], env)


def random_datalog(rng: random.Random, n_consts: int = 4):
    """Rules in the tuple form of naive_fixpoint, plus facts."""
    consts = [f"k{i}" for i in range(n_consts)]
    preds = {f"r{i}": rng.randint(1, 2) for i in range(rng.randint(2, 4))}
    names = list(preds)
    vars_ = ["X", "Y", "Z"]
    rules = []
    for _ in range(rng.randint(1, 5)):
        body = []
        bound = set()
        for _ in range(rng.randint(1, 3)):
            p = rng.choice(names)
            args = []
            for _ in range(preds[p]):
                if rng.random() < 0.8:
                    v = rng.choice(vars_)
                    args.append(("var", v))
                    bound.add(v)
                else:
                    args.append(("const", rng.choice(consts)))
            body.append(("atom", p, tuple(args)))
        if len(bound) >= 2 and rng.random() < 0.3:
            a, b = rng.sample(sorted(bound), 2)
            body.append(("neq", ("var", a), ("var", b)))
        h = rng.choice(names)
        hargs = []
        for _ in range(preds[h]):
            k = rng.random()
            if k < 0.75 and bound:
                hargs.append(("var", rng.choice(sorted(bound))))
            elif k < 0.9:
                hargs.append(("const", rng.choice(consts)))
            else:
                hargs.append(("var", "W"))  # unsafe head variable
        rules.append((("atom", h, tuple(hargs)), body))
    facts = set()
    for _ in range(rng.randint(1, 6)):
        p = rng.choice(names)
        facts.add((p,) + tuple(rng.choice(consts) for _ in range(preds[p])))
    return preds, consts, rules, facts


def datalog_to_syntax(preds: dict, rules: list) -> tuple[list[Rule], dict]:
    """Rules and a sort map in the package's syntax (one sort D)."""
    out = []
    for k, (head, body) in enumerate(rules):
        def term(a):
            return Var(a[1], "D") if a[0] == "var" else App(a[1], (), "D")

        h = Atom(head[1], tuple(term(a) for a in head[2]))
        lits = []
        for lit in body:
            if lit[0] == "atom":
                lits.append(Atom(lit[1], tuple(term(a) for a in lit[2])))
            else:
                lits.append(Not(Eq(term(lit[1]), term(lit[2]))))
        out.append(Rule(f"r{k}", h, tuple(lits)))
    return out, preds
