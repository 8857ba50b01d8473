"""Executability checking: enabledness of steps and validity of triples
{pre} transition {post} by reduction to ground satisfiability.

Derived policy predicates are shared by the pre- and post-state.  Rules
are therefore also applied to the post-state: every rule whose body uses
an updated state predicate gets copies in which that predicate is replaced
by its update definition (one copy per disjunct of the result).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .combine.tsoa import TheoryContext, tsoa_sat
from .errors import (
    NESTED_QUANTIFIER, NON_MONOTONE_UPDATE, PRECONDITION, STATE_NOT_QF, SoverifyError, Unsupported,
)
from .lang.system import Rule, Scenario, Transition, TwoLevelSystem
from .lang.wellformed import EXECUTABILITY, check_wellformedness, errors
from .logic.printer import pretty_formula, pretty_term
from .logic.syntax import (
    PM, STATE_PRED, STATE_VAR, WF, App, Atom, Formula, FunDecl, Not, Signature, Term, Var,
    conj, formula_terms, has_primes, is_quantifier_free, neg, subterms, term_size,
)
from .logic.transform import (
    PredicateUpdate, apply_updates, dnf, expand_finite_quantifiers, nnf, prime_formula, simplify,
    skolem_tag, subst_term, substitute,
)
from .smt.model import UNSAT, UNSUPPORTED, Model, Verdict

VALID = "valid"
INVALID = "invalid"


class ExecutabilityError(SoverifyError, ValueError):
    """A state formula is outside the quantifier-free executability fragment."""


# ---------------------------------------------------------------- transitions


@dataclass
class GroundTransition:
    """A transition with its witnesses replaced by Skolem constants."""

    transition: Transition
    sig: Signature
    skolems: dict  # Var -> App
    guard: Formula
    wf_updates: dict
    pm_updates: dict


def skolem_name(tau: str, step: int, var: str) -> str:
    return f"{tau}.{step}.{var}"


def skolemize_transition(
    system: TwoLevelSystem, tau: Transition, step: int, sig: Optional[Signature] = None
) -> GroundTransition:
    sig = (sig or system.sig).copy()
    sk: dict[Var, App] = {}
    for v in tau.witnesses:
        name = skolem_name(tau.name, step, v.name)
        if name in sig.funs:
            base, k = name, 1
            while f"{base}_{k}" in sig.funs:
                k += 1
            name = f"{base}_{k}"
        sig.add_fun(FunDecl(name, (), v.sort, skolem_tag(sig, v.sort)))
        sk[v] = App(name, (), v.sort)
    guard = substitute(tau.guard, sk)
    wf_up = {x: subst_term(t, sk) for x, t in tau.wf_updates}
    pm_up = {}
    for p, u in tau.pm_updates:
        m = {v: t for v, t in sk.items() if v not in u.params}
        pm_up[p] = PredicateUpdate(u.params, substitute(u.body, m))
    return GroundTransition(tau, sig, sk, guard, wf_up, pm_up)


def _is_identity(p: str, u: PredicateUpdate) -> bool:
    return isinstance(u.body, Atom) and u.body.pred == p and not u.body.primed and u.body.args == u.params


def post_state_rules(system: TwoLevelSystem, gt: GroundTransition) -> list[Rule]:
    """Copies of the policy rules read over the post-state."""
    sig = gt.sig
    pm_state = set(system.pm_state_preds())
    updated = {p: u for p, u in gt.pm_updates.items() if p in pm_state and not _is_identity(p, u)}
    out: list[Rule] = []
    if not updated:
        return out
    for r in system.pm.rules:
        if sig.preds[r.head.pred].tag == STATE_PRED:
            continue
        uses = [b for b in r.body if isinstance(b, Atom) and b.pred in updated]
        if not uses:
            continue
        parts = []
        for b in r.body:
            if isinstance(b, Atom) and b.pred in updated:
                parts.append(updated[b.pred].apply(b.args))
            else:
                parts.append(b)
        body = nnf(conj(*parts))
        if not is_quantifier_free(body):
            raise Unsupported(NESTED_QUANTIFIER, f"update used by rule {r.name} is quantified")
        for k, cube in enumerate(dnf(body)):
            lits = []
            for lit in cube:
                inner = lit.arg if isinstance(lit, Not) else lit
                if isinstance(inner, Atom):
                    if isinstance(lit, Not):
                        raise Unsupported(
                            NON_MONOTONE_UPDATE,
                            f"rule {r.name} reads {inner.pred} through a negative update in {gt.transition.name}",
                        )
                    lvl = system.pred_level(inner.pred) if sig.preds[inner.pred].tag == STATE_PRED else sig.preds[inner.pred].tag
                    if lvl != PM:
                        raise Unsupported(
                            PRECONDITION,
                            f"update read by rule {r.name} mentions workflow predicate {inner.pred}",
                        )
                for t in formula_terms(inner):
                    for s in subterms(t):
                        if isinstance(s, App) and sig.funs[s.fun].tag in (WF, STATE_VAR):
                            raise Unsupported(
                                PRECONDITION,
                                f"update read by rule {r.name} mentions workflow symbol {s.fun}",
                            )
                lits.append(lit)
            out.append(Rule(f"{r.name}@{gt.transition.name}.{k}", r.head, tuple(lits)))
    return out


# ---------------------------------------------------------------- obligations


@dataclass
class TripleObligation:
    pre: Formula
    transition: str
    post: Formula
    reduced: Formula
    sig: Signature
    ground: GroundTransition
    extra_rules: list = field(default_factory=list)
    scenario: Optional[str] = None
    step: int = 0


def _qf_state(system: TwoLevelSystem, f: Formula, what: str) -> Formula:
    g = expand_finite_quantifiers(f, system.enum_domains())
    if not is_quantifier_free(g):
        raise ExecutabilityError(
            f"{what} must be quantifier-free after expanding quantifiers over enumerated sorts "
            "(executability checking needs quantifier-free state formulas)"
        )
    return g


def reduce_triple(
    system: TwoLevelSystem,
    pre: Formula,
    tau: str,
    post: Formula,
    step: int = 0,
    scenario: Optional[str] = None,
) -> TripleObligation:
    t = system.transition(tau)
    pre_q = _qf_state(system, pre, "pre-condition")
    post_q = _qf_state(system, post, "post-condition")
    gt = skolemize_transition(system, t, step)
    guard = _qf_state(system, gt.guard, f"guard of {tau}")
    primed = prime_formula(post_q, system.state_vars, system.state_preds)
    post_bar = apply_updates(primed, gt.wf_updates, gt.pm_updates)
    reduced = simplify(conj(pre_q, guard, neg(post_bar)))
    assert not has_primes(reduced) and is_quantifier_free(reduced)
    rules = post_state_rules(system, gt)
    return TripleObligation(pre, tau, post, reduced, gt.sig, gt, rules, scenario, step)


@dataclass
class StepResult:
    status: str  # valid | invalid | unsupported
    verdict: Verdict
    witness: dict = field(default_factory=dict)
    reason: Optional[str] = None
    detail: str = ""


def _witness(model: Model, gt: GroundTransition, terms: list[Term]) -> dict:
    out = {}
    for v, c in gt.skolems.items():
        try:
            val = model.eval_term(c)
        except KeyError:
            continue
        best = None
        for t in terms:
            if t == c or any(s in gt.skolems.values() for s in subterms(t)):
                continue
            try:
                if model.eval_term(t) == val and (best is None or (term_size(t), pretty_term(t)) < (term_size(best), pretty_term(best))):
                    best = t
            except KeyError:
                continue
        out[v.name] = pretty_term(best) if best is not None else val
    return out


def check_triple(
    ob: TripleObligation,
    system: TwoLevelSystem,
    mode: Optional[str] = None,
    horn_depth: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> StepResult:
    ctx = TheoryContext.from_system(system, ob.sig, ob.extra_rules, mode, horn_depth)
    try:
        v = tsoa_sat(ob.reduced, ctx, trace=trace)
    except Unsupported as e:
        v = Verdict(UNSUPPORTED, reason=e.code, detail=e.detail)
    if v.status == UNSUPPORTED:
        return StepResult(UNSUPPORTED, v, reason=v.reason, detail=v.detail)
    if v.status == UNSAT:
        return StepResult(VALID, v)
    terms = [s for t in formula_terms(ob.reduced) for s in subterms(t)]
    return StepResult(INVALID, v, witness=_witness(v.model, ob.ground, terms))


def check_enabled(
    system: TwoLevelSystem,
    pre: Formula,
    tau: str,
    step: int = 0,
    mode: Optional[str] = None,
    horn_depth: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> StepResult:
    t = system.transition(tau)
    pre_q = _qf_state(system, pre, "pre-condition")
    gt = skolemize_transition(system, t, step)
    guard = _qf_state(system, gt.guard, f"guard of {tau}")
    f = simplify(conj(pre_q, guard))
    ctx = TheoryContext.from_system(system, gt.sig, (), mode, horn_depth)
    try:
        v = tsoa_sat(f, ctx, trace=trace)
    except Unsupported as e:
        v = Verdict(UNSUPPORTED, reason=e.code, detail=e.detail)
    if v.status == UNSUPPORTED:
        return StepResult(UNSUPPORTED, v, reason=v.reason, detail=v.detail)
    if v.status == UNSAT:
        return StepResult("disabled", v)
    terms = [s for x in formula_terms(f) for s in subterms(x)]
    return StepResult("enabled", v, witness=_witness(v.model, gt, terms))


# ---------------------------------------------------------------- scenarios


def run_scenario(
    system: TwoLevelSystem,
    sc: Scenario,
    mode: Optional[str] = None,
    horn_depth: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> dict:
    """Check every step; the report follows declaration order."""
    errs = errors(check_wellformedness(system, EXECUTABILITY))
    if errs:
        return {"scenario": sc.name, "system": system.name, "steps": [], "verdict": UNSUPPORTED,
                "reason": PRECONDITION, "detail": "; ".join(d.message for d in errs)}
    states = list(sc.states)
    steps = []
    verdict = VALID
    first_failure = None
    for i, tau in enumerate(sc.steps):
        pre, post = states[i], states[i + 1]
        entry: dict = {"index": i, "transition": tau}
        try:
            en = check_enabled(system, pre, tau, i, mode, horn_depth, trace)
            ob = reduce_triple(system, pre, tau, post, i, sc.name)
            tr = check_triple(ob, system, mode, horn_depth, trace)
        except ExecutabilityError as e:
            entry.update({"enabled": UNSUPPORTED, "triple": UNSUPPORTED, "reason": STATE_NOT_QF, "detail": str(e)})
            steps.append(entry)
            verdict = UNSUPPORTED
            continue
        entry["enabled"] = UNSUPPORTED if en.status == UNSUPPORTED else en.status == "enabled"
        if en.status == "enabled":
            entry["witness"] = en.witness
        entry["triple"] = tr.status
        entry["obligation"] = pretty_formula(ob.reduced)
        if ob.extra_rules:
            entry["post_state_rules"] = len(ob.extra_rules)
        if tr.status == INVALID:
            entry["countermodel"] = {"witness": tr.witness, "model": tr.verdict.model.to_json()}
        for r in (en, tr):
            if r.status == UNSUPPORTED:
                entry["reason"] = r.reason
                entry["detail"] = r.detail
        steps.append(entry)
        if UNSUPPORTED in (en.status, tr.status):
            verdict = UNSUPPORTED
        elif (tr.status != VALID or en.status != "enabled") and verdict == VALID:
            verdict = INVALID
            if first_failure is None:
                first_failure = i
    rep = {"scenario": sc.name, "system": system.name, "steps": steps, "verdict": verdict}
    if first_failure is not None:
        rep["first_failure"] = first_failure
    return rep
