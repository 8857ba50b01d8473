"""Static checks of a two-level system against the framework assumptions
and the preconditions of the two verification modes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..logic.syntax import (
    PM, STATE_PRED, STATE_VAR, SUBSTRATE, WF, And, Atom, Exists, Forall, Iff, Implies, Not, Or,
    is_quantifier_free, iter_formulas,
)
from .system import ID_SORT, TwoLevelSystem

EXECUTABILITY = "executability"
INVARIANT = "invariant"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str  # "error" or "warning"
    message: str
    where: str = ""

    def to_json(self) -> dict:
        return {"code": self.code, "severity": self.severity, "message": self.message, "where": self.where}


def _positive_universal(f) -> bool:
    """True when f is a universal sentence (after pushing negations)."""

    def go(g, pos: bool) -> bool:
        if isinstance(g, Forall):
            return pos and go(g.body, pos)
        if isinstance(g, Exists):
            return (not pos) and go(g.body, pos)
        if isinstance(g, Not):
            return go(g.arg, not pos)
        if isinstance(g, (And, Or)):
            return all(go(a, pos) for a in g.args)
        if isinstance(g, Implies):
            return go(g.lhs, not pos) and go(g.rhs, pos)
        if isinstance(g, Iff):
            return is_quantifier_free(g)
        return True

    return go(f, True)


def check_wellformedness(system: TwoLevelSystem, mode: Optional[str] = None) -> list[Diagnostic]:
    sig = system.sig
    out: list[Diagnostic] = []

    def err(code: str, msg: str, where: str = "") -> None:
        out.append(Diagnostic(code, "error", msg, where))

    def warn(code: str, msg: str, where: str = "") -> None:
        out.append(Diagnostic(code, "warning", msg, where))

    if system.id_sort is None:
        err("FRAME-NO-ID", "the substrate must contain the identity sort Id")

    # symbols may only cross theories through substrate sorts
    for d in sig.funs.values():
        if d.tag in (WF, PM):
            for s in d.args + (d.result,):
                st = sig.sort_tag(s)
                if st not in (SUBSTRATE, d.tag):
                    err("SIG-CROSS", f"{d.tag} function {d.name} uses sort {s} private to {st}", d.name)
    for d in sig.preds.values():
        if d.tag in (WF, PM):
            for s in d.args:
                st = sig.sort_tag(s)
                if st not in (SUBSTRATE, d.tag):
                    err("SIG-CROSS", f"{d.tag} predicate {d.name} uses sort {s} private to {st}", d.name)
        if d.tag == STATE_PRED:
            tags = {sig.sort_tag(s) for s in d.args} - {SUBSTRATE}
            if len(tags) > 1:
                err("SIG-CROSS", f"state predicate {d.name} mixes workflow and policy sorts", d.name)

    # policy rules
    for r in system.pm.rules:
        for lit in (r.head,) + r.body:
            for g in iter_formulas(lit):
                if isinstance(g, Atom):
                    tag = sig.preds[g.pred].tag
                    if tag == WF or (tag == STATE_PRED and system.pred_level(g.pred) == WF):
                        err("PM-RULE-WF-SYMBOL", f"rule {r.name} mentions workflow predicate {g.pred}", r.name)
        if r.is_fact and sig.preds[r.head.pred].tag == STATE_PRED:
            err(
                "PM-STATE-PRED-FACT",
                f"state predicate {r.head.pred} is asserted as a policy fact by {r.name}; "
                "state predicates must be intensional",
                r.name,
            )
    for a in system.wf_axioms:
        if not _positive_universal(a.formula):
            warn("WF-AXIOM-SHAPE", f"axiom {a.name} is not universal; workflow checks will be Unsupported", a.name)

    if mode == EXECUTABILITY:
        if system.substrate.id_mode != "edt":
            err("EXEC-ID-NOT-EDT", "executability checking needs Id to be an enumerated datatype")
        if system.init.id_vars:
            warn("EXEC-INIT-IDS", "initial condition quantifies over Id; scenarios should state it ground")
    elif mode == INVARIANT:
        if system.substrate.id_mode != "equiv":
            err("INV-ID-NOT-EQUIV", "invariant checking needs Id to carry only equality")
        if system.pm.mode != "datalog":
            err("INV-PM-NOT-DATALOG", "invariant checking needs a Datalog policy theory")
        for d in sig.funs.values():
            if d.tag == PM and d.args:
                err("INV-PM-NOT-DATALOG", f"policy function symbol {d.name} is outside Datalog", d.name)
            if d.tag in (WF, PM, STATE_VAR) and d.args and d.result == ID_SORT:
                err(
                    "INV-ID-VALUED-FUNCTION",
                    f"decidability precondition violated: Id-valued function {d.name}",
                    d.name,
                )
    return out


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]
