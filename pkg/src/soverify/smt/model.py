"""Finite interpretations and solver verdicts."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from ..logic.printer import pretty_formula
from ..logic.syntax import (
    And, App, Atom, BoolConst, Eq, Exists, Forall, Formula, Iff, Implies, Not, Or, Term, Var,
)

SAT = "sat"
UNSAT = "unsat"
UNSUPPORTED = "unsupported"


@dataclass
class Model:
    """Domain elements per sort plus function and predicate tables.

    Tables are keyed by (symbol, primed).  They may be partial: evaluation
    of a term outside the table raises KeyError, which callers treat as a
    bug in the producing solver.
    """

    universe: dict[str, list[str]] = field(default_factory=dict)
    funs: dict[tuple[str, bool], dict[tuple, str]] = field(default_factory=dict)
    preds: dict[tuple[str, bool], dict[tuple, bool]] = field(default_factory=dict)

    def eval_term(self, t: Term, env: Optional[dict] = None) -> str:
        if isinstance(t, Var):
            return (env or {})[t]
        args = tuple(self.eval_term(a, env) for a in t.args)
        return self.funs[(t.fun, t.primed)][args]

    def eval(self, f: Formula, env: Optional[dict] = None) -> bool:
        env = env or {}
        if isinstance(f, BoolConst):
            return f.value
        if isinstance(f, Atom):
            args = tuple(self.eval_term(a, env) for a in f.args)
            return self.preds.get((f.pred, f.primed), {}).get(args, False)
        if isinstance(f, Eq):
            return self.eval_term(f.lhs, env) == self.eval_term(f.rhs, env)
        if isinstance(f, Not):
            return not self.eval(f.arg, env)
        if isinstance(f, And):
            return all(self.eval(a, env) for a in f.args)
        if isinstance(f, Or):
            return any(self.eval(a, env) for a in f.args)
        if isinstance(f, Implies):
            return (not self.eval(f.lhs, env)) or self.eval(f.rhs, env)
        if isinstance(f, Iff):
            return self.eval(f.lhs, env) == self.eval(f.rhs, env)
        if isinstance(f, (Forall, Exists)):
            doms = [self.universe.get(v.sort, []) for v in f.vars]
            results = (
                self.eval(f.body, {**env, **dict(zip(f.vars, combo))})
                for combo in itertools.product(*doms)
            )
            return all(results) if isinstance(f, Forall) else any(results)
        raise TypeError(f"cannot evaluate {f!r}")

    def to_json(self) -> dict:
        def fkey(k):
            return k[0] + ("'" if k[1] else "")

        return {
            "universe": {s: list(es) for s, es in sorted(self.universe.items())},
            "functions": {
                fkey(k): sorted(([list(a), v] for a, v in tab.items()), key=str)
                for k, tab in sorted(self.funs.items())
            },
            "predicates": {
                fkey(k): sorted(list(a) for a, v in tab.items() if v)
                for k, tab in sorted(self.preds.items())
            },
        }

    def merged(self, other: "Model") -> "Model":
        """Union of two models over a common element naming; tables must
        agree where both are defined."""
        m = Model(
            {s: list(v) for s, v in self.universe.items()},
            {k: dict(v) for k, v in self.funs.items()},
            {k: dict(v) for k, v in self.preds.items()},
        )
        for s, es in other.universe.items():
            cur = m.universe.setdefault(s, [])
            cur.extend(e for e in es if e not in cur)
        for k, tab in other.funs.items():
            dst = m.funs.setdefault(k, {})
            for a, v in tab.items():
                if dst.get(a, v) != v:
                    raise AssertionError(f"models disagree on {k}{a}")
                dst[a] = v
        for k, tab in other.preds.items():
            dst = m.preds.setdefault(k, {})
            for a, v in tab.items():
                if dst.get(a, v) != v:
                    raise AssertionError(f"models disagree on {k}{a}")
                dst[a] = v
        return m

    def renamed(self, mapping: dict[str, str]) -> "Model":
        def r(e: str) -> str:
            return mapping.get(e, e)

        uni: dict[str, list[str]] = {}
        for s, es in self.universe.items():
            out: list[str] = []
            for e in es:
                if r(e) not in out:
                    out.append(r(e))
            uni[s] = out
        funs = {k: {tuple(map(r, a)): r(v) for a, v in tab.items()} for k, tab in self.funs.items()}
        preds = {k: {tuple(map(r, a)): v for a, v in tab.items()} for k, tab in self.preds.items()}
        return Model(uni, funs, preds)


@dataclass
class Verdict:
    status: str
    model: Optional[Model] = None
    core: tuple = ()
    reason: Optional[str] = None
    detail: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.status == SAT

    @property
    def unsat(self) -> bool:
        return self.status == UNSAT

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.core:
            out["core"] = [pretty_formula(c) for c in self.core]
        if self.reason:
            out["reason"] = self.reason
        if self.detail:
            out["detail"] = self.detail
        if self.model is not None:
            out["model"] = self.model.to_json()
        return out


def model_constants(model: Model) -> dict[str, str]:
    """Values of 0-ary function symbols (unprimed and primed)."""
    out = {}
    for (name, primed), tab in model.funs.items():
        if () in tab:
            out[name + ("'" if primed else "")] = tab[()]
    return out


def const_value(model: Model, c: App) -> str:
    return model.funs[(c.fun, c.primed)][()]
