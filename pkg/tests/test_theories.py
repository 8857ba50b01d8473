import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ROOT
from oracles import datalog_to_syntax, ground_mix_system, naive_fixpoint, random_datalog
from soverify.errors import HORN_DEPTH, Unsupported
from soverify.lang.parser import parse_formula, parse_spec, parse_spec_file
from soverify.logic.syntax import App, Atom, Var
from soverify.smt.model import SAT, UNSAT, UNSUPPORTED
from soverify.theories.horn import (
    NotDatalog, datalog_saturate, horn_derive, match, pm_theory_sat, resolve, unify,
)
from soverify.theories.wf import instantiate_universal_axioms, wf_theory_sat

CAR = ROOT / "specs" / "car_registration.sospec"
CLERK = ROOT / "specs" / "clerk_certificates.sospec"


# ---------------------------------------------------------------- unification


def test_unify_and_match():
    x, y = Var("X", "D"), Var("Y", "D")
    a = App("a", (), "D")
    f = lambda t: App("f", (t,), "D")
    s = unify(f(x), f(f(y)), {})
    assert resolve(x, s) == f(y)
    assert unify(x, f(x), {}) is None  # occurs check
    assert match(f(x), f(a), {}) == {x: a}
    assert match(f(a), f(x), {}) is None  # matching binds pattern variables only


# ---------------------------------------------------------------- workflow axioms


def test_axioms_instantiate_on_query_terms():
    s = parse_spec_file(str(CLERK)).system()
    q = [parse_formula("(= (sender (msg RegOffCA certEdEmpl Helen)) Ed)", s.sig)]
    inst = instantiate_universal_axioms(s.wf_axioms, q, s.enum_domains())
    want = parse_formula("(= (sender (msg RegOffCA certEdEmpl Helen)) RegOffCA)", s.sig)
    assert want in inst


def test_clerk_axioms_decide_message_queries():
    s = parse_spec_file(str(CLERK)).system()
    dom = s.enum_domains()

    def status(*texts):
        return wf_theory_sat([parse_formula(t, s.sig) for t in texts], s.wf_axioms, dom).status

    assert status("(not (= (sender (msg RegOffCA certEdEmpl Helen)) RegOffCA))") == UNSAT
    assert status("(= (sender (msg RegOffCA certEdEmpl Helen)) Ed)") == UNSAT
    assert status("(cert_of_role certEdEmpl Helen employee)") == UNSAT
    assert status("(cert_of_role certEdEmpl Ed employee)") == SAT
    assert status("(mem (msg RegOffCA certEdEmpl Helen) (ins (msg RegOffCA certEdEmpl Helen) mty))") == SAT


def test_unsat_core_names_the_contradiction():
    s = parse_spec_file(str(CLERK)).system()
    lits = [parse_formula(t, s.sig) for t in ("(= net mty)", "(mem (msg Ed certEdEmpl Res) net)", "(= Ed Ed)")]
    v = wf_theory_sat(lits, s.wf_axioms, s.enum_domains())
    assert v.status == UNSAT and set(v.core) == set(lits[:2])


def test_non_universal_axiom_is_unsupported():
    s = parse_spec(
        "(system S (substrate (equiv Id)) "
        "(wf (sorts M) (preds (r M)) (axioms (axiom some (exists ((E M)) (r E))))))"
    ).system()
    with pytest.raises(Unsupported) as ei:
        wf_theory_sat([], s.wf_axioms)
    assert ei.value.code == "wf-axiom-shape"


# ---------------------------------------------------------------- Horn policies


def _car():
    s = parse_spec_file(str(CAR)).system()
    facts = [parse_formula(x, s.sig) for x in ("(hasrole Ed Helen head)", "(hasrole Ed Ed employee)")]
    goal = parse_formula("(knows CRep (storedocCRep Ed))", s.sig)
    return s, facts, goal


def test_depth_bound_prunes_the_chain():
    s, facts, goal = _car()
    ok, tree, fb = horn_derive(s.pm.rules, facts, goal, 2)
    assert not ok and tree is None and fb.pruned > 0
    ok, tree, fb = horn_derive(s.pm.rules, facts, goal, 3)
    assert ok and fb.pruned == 0
    # a larger bound adds nothing once saturation is complete
    assert len(horn_derive(s.pm.rules, facts, goal, 6)[2].facts) == len(fb.facts)


def test_derivation_without_hypotheses_fails():
    s, _, goal = _car()
    ok, _, fb = horn_derive(s.pm.rules, [], goal, 6)
    assert not ok


SUCC = """
(system Nat
  (substrate (equiv Id))
  (pm (mode horn 3)
    (sorts N) (funs (z N) (s N N)) (preds (even N) (odd N))
    (rules (rule E0 (even z)) (rule OS (odd (s X)) (even X)) (rule ES (even (s X)) (odd X)))))
"""


def test_pruned_saturation_is_unsupported():
    sys_ = parse_spec(SUCC).system()
    v = pm_theory_sat([], sys_.pm.rules, 3)
    assert v.status == UNSUPPORTED and v.reason == HORN_DEPTH


def test_conflict_inside_the_bound_is_unsat():
    sys_ = parse_spec(SUCC).system()
    lit = parse_formula("(not (odd (s (s (s z)))))", sys_.sig)
    v = pm_theory_sat([lit], sys_.pm.rules, 3)
    assert v.status == UNSAT and v.core == (lit,)
    assert v.stats["derivation"]["rule"] == "OS"


def test_datalog_policy_with_closed_model():
    system = ground_mix_system()
    sig = system.sig
    # rule disequalities over boss need its value settled
    lits = [parse_formula(t, sig) for t in ("(q b admin)", "(not (q b user))", "(= boss c)")]
    v = pm_theory_sat(lits, system.pm.rules, None, system.enum_domains()["Id"])
    assert v.status == UNSAT and set(v.core) == set(lits[:2])
    ok = [parse_formula(t, sig) for t in ("(q b admin)", "(= boss c)")]
    v = pm_theory_sat(ok, system.pm.rules, None, system.enum_domains()["Id"])
    assert v.status == SAT
    # the model is closed under every rule
    for lit in ok:
        assert v.model.eval(lit)
    for t in ("(p b)", "(q b user)", "(p c)", "(q c admin)"):
        assert v.model.eval(parse_formula(t, sig)), t


def test_function_symbols_are_not_datalog():
    sys_ = parse_spec(SUCC).system()
    with pytest.raises(NotDatalog):
        datalog_saturate(sys_.pm.rules, [], {"N": [App("z", (), "N")]})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_datalog_matches_naive_fixpoint(seed):
    rng = random.Random(seed)
    preds, consts, rules, facts = random_datalog(rng)
    syn, _ = datalog_to_syntax(preds, rules)
    atoms = [Atom(f[0], tuple(App(c, (), "D") for c in f[1:])) for f in sorted(facts)]
    got = datalog_saturate(syn, atoms, {"D": [App(c, (), "D") for c in consts]})
    assert {(a.pred,) + tuple(t.fun for t in a.args) for a in got} == naive_fixpoint(rules, facts, consts)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_datalog_is_monotone_in_facts(seed):
    rng = random.Random(seed)
    preds, consts, rules, facts = random_datalog(rng)
    syn, _ = datalog_to_syntax(preds, rules)
    dom = {"D": [App(c, (), "D") for c in consts]}
    all_atoms = [Atom(f[0], tuple(App(c, (), "D") for c in f[1:])) for f in sorted(facts)]
    some = all_atoms[: len(all_atoms) // 2]
    assert datalog_saturate(syn, some, dom) <= datalog_saturate(syn, all_atoms, dom)
