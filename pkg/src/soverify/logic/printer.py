"""Rendering of terms and formulas in the s-expression surface syntax."""
from __future__ import annotations

from .syntax import (
    And, Atom, BoolConst, Eq, Exists, Forall, Formula, Iff, Implies, Not, Or, Term, Var,
)


def pretty_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    name = t.fun + ("'" if t.primed else "")
    if not t.args:
        return name
    return "(" + " ".join([name] + [pretty_term(a) for a in t.args]) + ")"


def _binder(vs: tuple) -> str:
    return "(" + " ".join(f"({v.name} {v.sort})" for v in vs) + ")"


def pretty_formula(f: Formula) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        name = f.pred + ("'" if f.primed else "")
        if not f.args:
            return name
        return "(" + " ".join([name] + [pretty_term(a) for a in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {pretty_term(f.lhs)} {pretty_term(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {pretty_formula(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(pretty_formula(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(pretty_formula(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(=> {pretty_formula(f.lhs)} {pretty_formula(f.rhs)})"
    if isinstance(f, Iff):
        return f"(<=> {pretty_formula(f.lhs)} {pretty_formula(f.rhs)})"
    if isinstance(f, Forall):
        return f"(forall {_binder(f.vars)} {pretty_formula(f.body)})"
    if isinstance(f, Exists):
        return f"(exists {_binder(f.vars)} {pretty_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def pretty(x) -> str:
    if isinstance(x, Term):
        return pretty_term(x)
    return pretty_formula(x)


def pretty_block(f: Formula, indent: int = 0, width: int = 88) -> str:
    """Multi-line rendering that breaks long connectives one argument per line."""
    flat = pretty_formula(f)
    pad = " " * indent
    if len(flat) + indent <= width:
        return pad + flat
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        inner = "\n".join(pretty_block(a, indent + 2, width) for a in f.args)
        return f"{pad}({head}\n{inner})"
    if isinstance(f, (Implies, Iff)):
        head = "=>" if isinstance(f, Implies) else "<=>"
        return (f"{pad}({head}\n{pretty_block(f.lhs, indent + 2, width)}\n"
                f"{pretty_block(f.rhs, indent + 2, width)})")
    if isinstance(f, Not):
        return f"{pad}(not\n{pretty_block(f.arg, indent + 2, width)})"
    if isinstance(f, (Forall, Exists)):
        head = "forall" if isinstance(f, Forall) else "exists"
        return f"{pad}({head} {_binder(f.vars)}\n{pretty_block(f.body, indent + 2, width)})"
    return pad + flat
