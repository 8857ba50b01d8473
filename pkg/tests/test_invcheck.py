import pytest

from conftest import ROOT
from soverify.errors import EXISTENTIAL, PRECONDITION
from soverify.invcheck import (
    CTI_NOTE, ESTABLISHED, NOT_ESTABLISHED, build_I1_I2, check_inductive, check_task, decide,
    negate_preservation,
)
from soverify.lang.parser import parse_formula, parse_spec_file
from soverify.logic.syntax import Forall, has_primes, is_quantifier_free
from soverify.smt.model import SAT, UNSAT, UNSUPPORTED
from state_oracle import StateOracle, implication_valid, initiation_valid

TOYS = ROOT / "specs" / "toys"
HEADS = TOYS / "certified_heads.sospec"


def _load(path):
    spec = parse_spec_file(str(path))
    return spec, spec.system()


def test_trivial_invariant_is_established():
    _, system = _load(HEADS)
    top = parse_formula("(forall ((i Id)) true)", system.sig)
    rep = check_inductive(system, top)
    assert rep["verdict"] == ESTABLISHED
    assert [e["kind"] for e in rep["obligations"]] == ["I1", "I2"] + ["I3"] * len(system.transitions)


def test_initiation_obligation():
    spec, system = _load(HEADS)
    psi = spec.invariant("no-heads").target
    i1, _ = build_I1_I2(system, psi, psi)
    assert decide(i1, system).status == UNSAT
    psi = spec.invariant("everyone-self-head").target
    i1, _ = build_I1_I2(system, psi, psi)
    v = decide(i1, system)
    assert v.status == SAT
    assert [s.fun for s in i1.skolems] == ["init.i"]
    assert v.model.eval(i1.ground_part)


def test_preservation_obligation_shape():
    spec, system = _load(HEADS)
    psi = spec.invariant("heads-certified").target
    ob = negate_preservation(system, psi, "Appoint")
    assert ob.kind == "I3" and ob.transition == "Appoint"
    assert is_quantifier_free(ob.ground_part) and not has_primes(ob.ground_part)
    assert isinstance(ob.universal_part, Forall)
    assert {s.fun for s in ob.skolems} == {"Appoint.inv.i", "Appoint.inv.j", "Appoint.post.i", "Appoint.post.j"}
    assert decide(ob, system).status == UNSAT


def test_representatives_cover_skolem_constants():
    spec, system = _load(HEADS)
    rep = check_task(system, spec.invariant("heads-certified"))
    for e in rep["obligations"]:
        if e["kind"] == "I3" and e["transition"] == "Appoint":
            assert {"Appoint.inv.i", "Appoint.inv.j", "Appoint.post.i", "Appoint.post.j"} <= set(e["representatives"])


def test_counterexample_to_induction_is_labelled():
    spec, system = _load(HEADS)
    rep = check_task(system, spec.invariant("no-heads"))
    assert rep["verdict"] == NOT_ESTABLISHED and rep["note"] == CTI_NOTE
    bad = [e for e in rep["obligations"] if e["verdict"] == "invalid"]
    assert [e["transition"] for e in bad] == ["Appoint"]
    assert "counterexample-to-induction" in bad[0]
    assert set(bad[0]["counterexample-to-induction"]["skolems"]) >= {"Appoint.inv.i", "Appoint.inv.j"}


def test_initiation_failure_is_a_plain_counterexample():
    spec, system = _load(HEADS)
    rep = check_task(system, spec.invariant("everyone-self-head"))
    i1 = rep["obligations"][0]
    assert i1["kind"] == "I1" and i1["verdict"] == "invalid" and "counterexample" in i1


def test_candidate_strengthening():
    spec, system = _load(TOYS / "token_ring.sospec")
    phi = spec.invariant("mutual-exclusion").target
    weaker = parse_formula("(forall ((i Id) (j Id)) (or (not (holds i)) (not (holds j)) (= i j) (holds leader)))", system.sig)
    rep = check_inductive(system, weaker, phi)
    assert rep["verdict"] == ESTABLISHED


def test_outside_the_fragment():
    spec, system = _load(ROOT / "specs" / "car_registration.sospec")
    rep = check_task(system, spec.invariant("integrity"))
    assert rep["verdict"] == UNSUPPORTED and rep["reason"] == EXISTENTIAL
    # an enumerated Id fails the mode precondition, after the fragment check
    _, docflow = _load(TOYS / "docflow.sospec")
    ok = parse_formula("(forall ((i Id)) true)", docflow.sig)
    assert check_inductive(docflow, ok)["reason"] == PRECONDITION
    ex = parse_formula("(exists ((i Id)) (hasrole i staff))", docflow.sig)
    assert check_inductive(docflow, ex)["reason"] == EXISTENTIAL


# ---------------------------------------------------------------- against explicit states


def _equiv_tasks():
    out = []
    for p in sorted(TOYS.glob("*.sospec")):
        spec, system = _load(p)
        if system.substrate.id_mode == "equiv":
            out += [(system, inv) for inv in spec.invariants]
    return out


@pytest.mark.parametrize("system,inv", _equiv_tasks(), ids=lambda x: getattr(x, "name", ""))
def test_verdicts_are_sound_on_small_universes(system, inv):
    rep = check_task(system, inv)
    psi = inv.candidate or inv.target
    if rep["verdict"] == ESTABLISHED:
        # every state reachable with one or two identities satisfies the target
        for n in (1, 2):
            o = StateOracle(system, n)
            for rigid, st in o.reachable():
                assert o.holds_everywhere(inv.target, rigid, st)
    first = {e["kind"]: e["verdict"] for e in rep["obligations"]}
    assert (first["I1"] == "valid") == initiation_valid(system, psi)
    assert (first["I2"] == "valid") == implication_valid(system, psi, inv.target)
