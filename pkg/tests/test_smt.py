import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soverify.errors import Unsupported
from soverify.lang.parser import parse_formula
from soverify.logic.syntax import WF, And, Atom, BoolConst, Eq, FunDecl, Iff, Implies, Not, Or
from soverify.smt.cc import CongruenceClosure
from soverify.smt.ground import GroundSolver, congruence_close, solve_ground
from soverify.smt.model import SAT, UNSAT
from soverify.smt.sat import Dpll, bool_enumerate
from soverify.smt.tseitin import Tseitin
from strategies import ROLE_CONSTS, SIG, ground_formulas, models


def _brute(nvars, clauses):
    out = []
    for bits in itertools.product([False, True], repeat=nvars):
        m = {i + 1: b for i, b in enumerate(bits)}
        if all(any(m[abs(l)] == (l > 0) for l in c) for c in clauses):
            out.append(m)
    return out


@st.composite
def cnfs(draw):
    n = draw(st.integers(1, 6))
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v]))
    clauses = draw(st.lists(st.lists(lit, min_size=1, max_size=3), max_size=14))
    return n, clauses


def _solver(n, clauses):
    s = Dpll()
    for _ in range(n):
        s.new_var()
    for c in clauses:
        s.add_clause(c)
    return s


# ---------------------------------------------------------------- DPLL


@settings(max_examples=300, deadline=None)
@given(cnfs())
def test_dpll_agrees_with_truth_tables(cnf):
    n, clauses = cnf
    r = _solver(n, clauses).solve()
    models_ = _brute(n, clauses)
    assert r.sat == bool(models_)
    if r.sat:
        assert all(any(r.model[abs(l)] == (l > 0) for l in c) for c in clauses)


@settings(max_examples=200, deadline=None)
@given(cnfs(), st.data())
def test_assumption_cores_are_refutations(cnf, data):
    n, clauses = cnf
    assumptions = data.draw(st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v])),
                                     max_size=4, unique_by=abs))
    r = _solver(n, clauses).solve(assumptions)
    with_units = clauses + [[a] for a in assumptions]
    assert r.sat == bool(_brute(n, with_units))
    if not r.sat:
        assert r.core <= set(assumptions)
        assert not _brute(n, clauses + [[a] for a in r.core])


@settings(max_examples=150, deadline=None)
@given(cnfs())
def test_enumeration_lists_every_model_once(cnf):
    n, clauses = cnf
    # blocking clauses accumulate, so each model must be total and fresh
    got = [tuple(sorted(m.items())) for m in bool_enumerate(n, clauses)]
    assert len(got) == len(set(got))
    assert set(got) == {tuple(sorted(m.items())) for m in _brute(n, clauses)}


def test_solver_is_reusable_after_reset():
    s = _solver(2, [[1, 2], [-1, 2]])
    assert s.solve().sat
    s.reset()
    s.add_clause([-2])
    r = s.solve()
    assert not r.sat and r.core == frozenset()


# ---------------------------------------------------------------- Tseitin


def _prop_atoms(f, out):
    if isinstance(f, (Atom, Eq)):
        out.setdefault(f, len(out))
    elif isinstance(f, Not):
        _prop_atoms(f.arg, out)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _prop_atoms(a, out)
    elif isinstance(f, (Implies, Iff)):
        _prop_atoms(f.lhs, out)
        _prop_atoms(f.rhs, out)
    return out


def _prop_eval(f, val):
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, (Atom, Eq)):
        return val[f]
    if isinstance(f, Not):
        return not _prop_eval(f.arg, val)
    if isinstance(f, And):
        return all(_prop_eval(a, val) for a in f.args)
    if isinstance(f, Or):
        return any(_prop_eval(a, val) for a in f.args)
    if isinstance(f, Implies):
        return (not _prop_eval(f.lhs, val)) or _prop_eval(f.rhs, val)
    return _prop_eval(f.lhs, val) == _prop_eval(f.rhs, val)


@settings(max_examples=200, deadline=None)
@given(ground_formulas())
def test_tseitin_is_equisatisfiable(f):
    atoms = list(_prop_atoms(f, {}))
    truth = any(_prop_eval(f, dict(zip(atoms, bits)))
                for bits in itertools.product([False, True], repeat=len(atoms)))
    sat = Dpll()
    lits = {}

    def atom_lit(a):
        lits[a] = sat.new_var()
        return lits[a]

    ts = Tseitin(sat, atom_lit)
    sat.add_clause([ts.encode(f)])
    r = sat.solve()
    assert r.sat == truth
    if r.sat:
        assert _prop_eval(f, {a: r.model[v] for a, v in lits.items()})


def test_tseitin_rejects_quantifiers():
    f = parse_formula("(forall ((I Id)) (w I))", SIG)
    with pytest.raises(Unsupported):
        Tseitin(Dpll(), lambda a: 1).encode(f)


# ---------------------------------------------------------------- congruence closure


def _cc_fga():
    cc = CongruenceClosure()
    a, b, c = (cc.add_node(k) for k in "abc")
    fa, fb = cc.add_node("f", (a,)), cc.add_node("f", (b,))
    return cc, a, b, c, fa, fb


def test_congruence_and_explanation():
    cc, a, b, c, fa, fb = _cc_fga()
    assert cc.merge(a, c, "ac") is None
    assert cc.merge(c, b, "cb") is None
    assert cc.same(fa, fb)
    assert cc.explain(fa, fb) == {"ac", "cb"}
    assert cc.explain(a, c) == {"ac"}


def test_backtrack_restores_classes():
    cc, a, b, c, fa, fb = _cc_fga()
    mark = cc.checkpoint()
    cc.merge(a, b, "ab")
    assert cc.same(fa, fb)
    cc.backtrack(mark)
    assert not cc.same(a, b) and not cc.same(fa, fb)
    assert cc.merge(b, c, "bc") is None and not cc.same(fa, fb)


def test_disequality_conflict_is_explained():
    cc, a, b, c, fa, fb = _cc_fga()
    assert cc.assert_diseq(fa, fb, "neq") is None
    conflict = cc.merge(a, b, "ab")
    assert conflict == {"neq", "ab"}


def test_distinct_constants_never_merge():
    cc, a, b, c, fa, fb = _cc_fga()
    cc.set_distinct(a)
    cc.set_distinct(b)
    assert cc.merge(a, c, "ac") is None
    assert cc.merge(c, b, "cb") == {"ac", "cb"}


# ---------------------------------------------------------------- ground solving


def test_ground_examples():
    def status(text):
        return solve_ground(parse_formula(text, SIG)).status

    assert status("(and (= (g a) a) (not (= (g (g a)) a)))") == UNSAT
    assert status("(and (= x y) (w x) (not (w y)))") == UNSAT
    assert status("(and (not (= a b)) (= (g a) b))") == SAT
    # Role is a closed enumeration only when its domain is given
    sig = SIG.copy()
    sig.add_fun(FunDecl("r0", (), "Role", WF))
    f = parse_formula("(and (q a r0) " + " ".join(f"(not (q a {r.fun}))" for r in ROLE_CONSTS) + ")", sig)
    assert solve_ground(f).status == SAT
    assert solve_ground(f, {"Role": ROLE_CONSTS}).status == UNSAT


def test_ground_solver_rejects_variables():
    with pytest.raises(Unsupported):
        solve_ground(parse_formula("(exists ((I Id)) (w I))", SIG))


def test_congruence_close_core_is_minimal():
    lits = [parse_formula(t, SIG) for t in ("(w b)", "(= x a)", "(= (g x) b)", "(not (= (g a) b))", "(w a)")]
    v = congruence_close(lits)
    assert v.status == UNSAT
    assert set(v.core) == set(lits[1:4])
    for i in range(len(v.core)):
        assert congruence_close(v.core[:i] + v.core[i + 1:]).status == SAT


def test_incremental_assumptions():
    gs = GroundSolver()
    gs.add(parse_formula("(=> (w x) (= x a))", SIG))
    assert gs.check([parse_formula("(w x)", SIG), parse_formula("(not (= x a))", SIG)]).status == UNSAT
    assert gs.check([parse_formula("(w x)", SIG)]).status == SAT


@settings(max_examples=200, deadline=None)
@given(ground_formulas(), models())
def test_ground_solver_is_sound_and_complete_on_samples(f, m):
    v = solve_ground(f, {"Role": ROLE_CONSTS})
    if v.status == SAT:
        assert v.model.eval(f)
    # any satisfying sample model refutes an unsat answer
    if m.eval(f):
        assert v.status == SAT
