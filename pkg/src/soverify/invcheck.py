"""Parameterized invariant checking with the three-premise induction rule.

For a target  always phi  and a candidate  psi  the obligations are

    I1   init and not psi           (initiation)
    I2   psi and not phi            (strengthening)
    I3   psi, tau, not psi'         (preservation, one per transition)

each of which must be unsatisfiable.  State formulas have to be universal
over Id with a quantifier-free matrix.  A negated one is turned into a
ground formula by Skolem constants for the violated instance; the
positive copies stay universal and are decided by instantiation over
representative Id constants.  A satisfiable preservation obligation is a
counterexample to induction: a pair of states that need not be reachable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .combine.tsoa import TheoryContext, tsoa_sat_universal
from .errors import EXISTENTIAL, NESTED_QUANTIFIER, NON_ID_QUANTIFIER, PRECONDITION, Unsupported
from .lang.system import ID_SORT, InvariantTask, TwoLevelSystem
from .lang.wellformed import INVARIANT, check_wellformedness, errors
from .logic.printer import pretty_formula
from .logic.syntax import (
    App, Exists, Forall, Formula, FunDecl, Signature, Var, conj, is_quantifier_free,
    iter_formulas, neg,
)
from .logic.transform import (
    apply_updates, expand_finite_quantifiers, prenex_universal, prime_formula, simplify,
    skolem_tag, substitute,
)
from .smt.model import SAT, UNSAT, UNSUPPORTED, Verdict
from .symexec import post_state_rules, skolemize_transition

VALID = "valid"
INVALID = "invalid"
ESTABLISHED = "established"
NOT_ESTABLISHED = "not-established"

CTI_NOTE = (
    "a satisfiable preservation obligation is a counterexample to induction; "
    "its pre-state need not be reachable"
)


@dataclass
class InvObligation:
    kind: str  # I1 | I2 | I3
    formula: Formula
    reduced: Formula
    sig: Signature
    transition: Optional[str] = None
    ground_part: Optional[Formula] = None
    universal_part: Optional[Formula] = None
    skolems: list = field(default_factory=list)
    extra_rules: list = field(default_factory=list)
    verdict: Optional[Verdict] = None


# ---------------------------------------------------------------- fragment


def universal_shape(f: Formula, domains: dict) -> tuple[tuple, Formula]:
    """Split a state formula into its universal Id prefix and quantifier-free
    matrix, or raise Unsupported with the first offending feature."""
    g = prenex_universal(expand_finite_quantifiers(f, domains))
    for h in iter_formulas(g):
        if isinstance(h, Exists):
            raise Unsupported(EXISTENTIAL, f"existential quantifier in {pretty_formula(f)}")
    if isinstance(g, Forall):
        vs, body = g.vars, g.body
    else:
        vs, body = (), g
    if not is_quantifier_free(body):
        raise Unsupported(NESTED_QUANTIFIER, pretty_formula(f))
    for v in vs:
        if v.sort != ID_SORT:
            raise Unsupported(NON_ID_QUANTIFIER, f"quantifier over sort {v.sort} in {pretty_formula(f)}")
    return vs, body


def _inv_domains(system: TwoLevelSystem) -> dict:
    return {s: cs for s, cs in system.enum_domains().items() if s != ID_SORT}


def _skolemize(vs: tuple, prefix: str, sig: Signature) -> tuple[Signature, dict]:
    sig = sig.copy()
    m: dict[Var, App] = {}
    for v in vs:
        name = sig.fresh_name(f"{prefix}.{v.name}")
        sig.add_fun(FunDecl(name, (), v.sort, skolem_tag(sig, v.sort)))
        m[v] = App(name, (), v.sort)
    return sig, m


def negate_instance(f: Formula, prefix: str, sig: Signature, domains: dict) -> tuple[Formula, Signature, list]:
    """not (forall j. M)  as  not M[j := fresh constants]."""
    vs, body = universal_shape(f, domains)
    sig2, m = _skolemize(vs, prefix, sig)
    return simplify(neg(substitute(body, m))), sig2, list(m.values())


# ---------------------------------------------------------------- obligations


def build_I1_I2(system: TwoLevelSystem, psi: Formula, phi: Formula) -> tuple[InvObligation, InvObligation]:
    doms = _inv_domains(system)
    universal_shape(psi, doms)
    init = expand_finite_quantifiers(system.init.formula(), doms)
    n1, sig1, sk1 = negate_instance(psi, "init", system.sig, doms)
    i1 = InvObligation("I1", conj(system.init.formula(), neg(psi)), conj(init, n1), sig1,
                       ground_part=n1, universal_part=init, skolems=sk1)
    n2, sig2, sk2 = negate_instance(phi, "target", system.sig, doms)
    pre = expand_finite_quantifiers(psi, doms)
    i2 = InvObligation("I2", conj(psi, neg(phi)), conj(pre, n2), sig2,
                       ground_part=n2, universal_part=pre, skolems=sk2)
    return i1, i2


def negate_preservation(system: TwoLevelSystem, psi: Formula, tau: str) -> InvObligation:
    """psi, tau and the negation of psi on the post-state, reduced to a
    ground part and the universal pre-state copy of psi."""
    doms = _inv_domains(system)
    vs, body = universal_shape(psi, doms)
    t = system.transition(tau)
    gt = skolemize_transition(system, t, "inv")
    sig, m = _skolemize(vs, f"{tau}.post", gt.sig)
    guard = expand_finite_quantifiers(gt.guard, doms)
    if not is_quantifier_free(guard):
        raise Unsupported(NESTED_QUANTIFIER, f"guard of {tau} is quantified")
    violated = prime_formula(substitute(body, m), system.state_vars, system.state_preds)
    post_bar = apply_updates(violated, gt.wf_updates, gt.pm_updates)
    ground = simplify(conj(guard, neg(post_bar)))
    universal = Forall(vs, body) if vs else body
    assert is_quantifier_free(ground)
    rules = post_state_rules(system, gt)
    formula = conj(psi, t.formula(system.sig), neg(prime_formula(psi, system.state_vars, system.state_preds)))
    return InvObligation("I3", formula, conj(ground, universal), sig, tau, ground, universal,
                         list(gt.skolems.values()) + list(m.values()), rules)


def decide(ob: InvObligation, system: TwoLevelSystem, horn_depth: Optional[int] = None,
           trace: Optional[Callable[[str], None]] = None) -> Verdict:
    ctx = TheoryContext.from_system(system, ob.sig, ob.extra_rules, "equiv", horn_depth)
    try:
        v = tsoa_sat_universal(ob.reduced, ctx, extra_reps=[s for s in ob.skolems if s.sort == ID_SORT], trace=trace)
    except Unsupported as e:
        v = Verdict(UNSUPPORTED, reason=e.code, detail=e.detail)
    ob.verdict = v
    return v


def _entry(ob: InvObligation) -> dict:
    v = ob.verdict
    e: dict = {"kind": ob.kind}
    if ob.transition is not None:
        e["transition"] = ob.transition
    if v.status == UNSAT:
        e["verdict"] = VALID
    elif v.status == SAT:
        e["verdict"] = INVALID
        label = "counterexample-to-induction" if ob.kind == "I3" else "counterexample"
        e[label] = {
            "skolems": {s.fun: v.model.eval_term(s) for s in ob.skolems if _evaluable(v.model, s)},
            "model": v.model.to_json(),
        }
    else:
        e["verdict"] = UNSUPPORTED
        e["reason"] = v.reason
        e["detail"] = v.detail
    if "representatives" in v.stats:
        e["representatives"] = v.stats["representatives"]
    return e


def _evaluable(model, t) -> bool:
    try:
        model.eval_term(t)
        return True
    except KeyError:
        return False


def _unsupported_report(task: str, system: TwoLevelSystem, e: Unsupported) -> dict:
    return {"task": task, "system": system.name, "obligations": [], "verdict": UNSUPPORTED,
            "reason": e.code, "detail": e.detail}


def check_inductive(
    system: TwoLevelSystem,
    target: Formula,
    candidate: Optional[Formula] = None,
    task: str = "invariant",
    horn_depth: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> dict:
    psi = target if candidate is None else candidate
    doms = _inv_domains(system)
    # the fragment comes first: a formula outside it is unsupported in any mode
    try:
        universal_shape(psi, doms)
        universal_shape(target, doms)
    except Unsupported as e:
        return _unsupported_report(task, system, e)
    errs = errors(check_wellformedness(system, INVARIANT))
    if errs:
        return _unsupported_report(task, system, Unsupported(PRECONDITION, "; ".join(d.message for d in errs)))
    try:
        obs = list(build_I1_I2(system, psi, target))
        obs += [negate_preservation(system, psi, t.name) for t in system.transitions]
    except Unsupported as e:
        return _unsupported_report(task, system, e)
    for ob in obs:
        decide(ob, system, horn_depth, trace)
    entries = [_entry(ob) for ob in obs]
    verdicts = {e["verdict"] for e in entries}
    if UNSUPPORTED in verdicts:
        overall = UNSUPPORTED
    elif INVALID in verdicts:
        overall = NOT_ESTABLISHED
    else:
        overall = ESTABLISHED
    rep = {"task": task, "system": system.name, "obligations": entries, "verdict": overall}
    if overall == NOT_ESTABLISHED:
        rep["note"] = CTI_NOTE
    return rep


def check_task(system: TwoLevelSystem, inv: InvariantTask, horn_depth: Optional[int] = None,
               trace: Optional[Callable[[str], None]] = None) -> dict:
    return check_inductive(system, inv.target, inv.candidate, inv.name, horn_depth, trace)
