"""Elaboration of .sospec files into typed systems and tasks.

Grammar sketch (one s-expression per block, ';' starts a comment)::

    (system NAME
      (substrate (enum Id c1 .. cn) | (equiv Id c1 ..) (enum Role r1 ..) ..)
      (wf (sorts S ..) (consts (c S) ..) (funs (f S1 .. Sn R) ..)
          (preds (p S1 .. Sn) ..) (axioms (axiom NAME FORMULA) ..))
      (pm (mode datalog | horn K) (sorts ..) (consts ..) (funs ..) (preds ..)
          (rules (rule NAME HEAD BODY-LITERAL ..) ..))
      (statevars (x S) ..)
      (statepreds (p S1 .. Sn) ..)
      (init (ids (i Id) ..) (wf FORMULA) (pred p (z1 .. zn) FORMULA) ..)
      (transition NAME (ids (i Id) ..) (data (d S) ..) (guard FORMULA)
                  (update x TERM) (update p (z1 .. zn) FORMULA) ..))
    (scenario NAME [(system NAME)] (state FORMULA|init) (step TRANSITION) (state ..) ..)
    (invariant NAME [(system NAME)] (always FORMULA) [(candidate FORMULA)])

Inside rules, identifiers that are not declared constants are variables
whose sorts are inferred from their argument positions; '_' is a fresh
variable at each occurrence.
"""
from __future__ import annotations

from typing import Optional

from ..logic.syntax import (
    ENUMERATED, FALSE, PM, STATE_PRED, STATE_VAR, SUBSTRATE, TRUE, UNINTERPRETED, WF,
    And, App, Atom, Eq, Exists, Forall, Formula, FunDecl, Iff, Implies, Not, Or, PredDecl,
    Signature, Sort, SortError, Term, Var, conj, ite,
)
from ..logic.transform import PredicateUpdate, expand_finite_quantifiers
from .sexpr import SExpr, SList, SpecError, Sym, pos, read_all
from .system import (
    ID_SORT, Axiom, HornTheory, InitialCondition, InvariantTask, Rule, Scenario, SpecFile,
    Substrate, Transition, TwoLevelSystem,
)

KEYWORDS = {"and", "or", "not", "=>", "<=>", "=", "distinct", "ite", "forall", "exists", "true", "false"}


def _err(msg: str, x: SExpr, production: str) -> SpecError:
    line, col = pos(x)
    return SpecError(msg, line, col, production)


def _sym(x: SExpr, production: str) -> Sym:
    if not isinstance(x, Sym):
        raise _err("expected an identifier", x, production)
    return x


def _list(x: SExpr, production: str, min_len: int = 0) -> SList:
    if not isinstance(x, SList) or len(x) < min_len:
        raise _err(f"expected a list of at least {min_len} elements", x, production)
    return x


def _head(x: SExpr) -> Optional[str]:
    if isinstance(x, SList) and x and isinstance(x[0], Sym):
        return str(x[0])
    return None


# ---------------------------------------------------------------- terms and formulas


class Elaborator:
    """Builds terms and formulas against a signature."""

    def __init__(self, sig: Signature, allow_primes: bool = False) -> None:
        self.sig = sig
        self.allow_primes = allow_primes
        self._counter = 0
        # rule mode: implicit variables
        self.rule_vars: Optional[dict[str, Var]] = None
        self._reserved: set[str] = set()

    # rule-variable handling -------------------------------------------

    def begin_rule(self, reserved: set[str]) -> None:
        self.rule_vars = {}
        self._reserved = set(reserved)
        self._wild = 0

    def end_rule(self) -> None:
        self.rule_vars = None

    def _fresh_wild(self) -> str:
        while True:
            self._wild += 1
            name = f"_{self._wild}"
            if name not in self._reserved and name not in (self.rule_vars or {}):
                return name

    def _fresh_bound(self, base: str, env: dict[str, Var]) -> str:
        while True:
            self._counter += 1
            name = f"{base}_{self._counter}"
            if name not in env and name not in self.sig.funs and name not in self.sig.preds:
                return name

    # terms ------------------------------------------------------------

    def term(self, x: SExpr, env: dict[str, Var], expected: Optional[str] = None) -> Term:
        t = self._term(x, env, expected)
        if expected is not None and t.sort != expected:
            raise _err(f"term {t} has sort {t.sort}, expected {expected}", x, "term")
        return t

    def _split_prime(self, name: str, x: SExpr) -> tuple[str, bool]:
        if name.endswith("'") and len(name) > 1:
            return name[:-1], True
        return name, False

    def _term(self, x: SExpr, env: dict[str, Var], expected: Optional[str]) -> Term:
        if isinstance(x, Sym):
            base, primed = self._split_prime(str(x), x)
            if base in env:
                if primed:
                    raise _err("variables cannot be primed", x, "term")
                return env[base]
            d = self.sig.funs.get(base)
            if d is not None and d.is_const:
                if primed:
                    self._check_prime(d.tag, base, x)
                return App(base, (), d.result, primed)
            if self.rule_vars is not None and base not in self.sig.funs and not primed:
                return self._rule_var(base, x, expected)
            if d is not None:
                raise _err(f"function {base} needs {len(d.args)} arguments", x, "term")
            raise _err(f"unknown identifier {base!r}", x, "term")
        lst = _list(x, "term", 1)
        head = _sym(lst[0], "term")
        base, primed = self._split_prime(str(head), head)
        d = self.sig.funs.get(base)
        if d is None:
            raise _err(f"unknown function symbol {base!r}", head, "term")
        if primed:
            raise _err("only state variables may be primed", head, "term")
        if len(lst) - 1 != len(d.args):
            raise _err(f"{base} expects {len(d.args)} arguments, got {len(lst) - 1}", lst, "term")
        args = tuple(self.term(a, env, s) for a, s in zip(lst[1:], d.args))
        return App(base, args, d.result)

    def _rule_var(self, name: str, x: SExpr, expected: Optional[str]) -> Var:
        assert self.rule_vars is not None
        if name == "_":
            if expected is None:
                raise _err("cannot infer the sort of '_'", x, "rule")
            name = self._fresh_wild()
            v = Var(name, expected)
            self.rule_vars[name] = v
            return v
        v = self.rule_vars.get(name)
        if v is None:
            if expected is None:
                raise _Deferred(name)
            v = Var(name, expected)
            self.rule_vars[name] = v
        return v

    def _check_prime(self, tag: str, name: str, x: SExpr) -> None:
        if tag not in (STATE_VAR, STATE_PRED):
            raise _err(f"{name} is not a state symbol and cannot be primed", x, "prime")
        if not self.allow_primes:
            raise _err(f"primed symbol {name}' is not permitted here", x, "prime")

    # formulas ---------------------------------------------------------

    def formula(self, x: SExpr, env: dict[str, Var]) -> Formula:
        if isinstance(x, Sym):
            s = str(x)
            if s == "true":
                return TRUE
            if s == "false":
                return FALSE
            base, primed = self._split_prime(s, x)
            d = self.sig.preds.get(base)
            if d is not None and not d.args:
                if primed:
                    self._check_prime(d.tag, base, x)
                return Atom(base, (), primed)
            raise _err(f"expected a formula, found {s!r}", x, "formula")
        lst = _list(x, "formula", 1)
        head = _sym(lst[0], "formula")
        h = str(head)
        args = lst[1:]
        if h == "and":
            return And(tuple(self.formula(a, env) for a in args)) if args else TRUE
        if h == "or":
            return Or(tuple(self.formula(a, env) for a in args)) if args else FALSE
        if h == "not":
            self._arity(lst, 1, h)
            return Not(self.formula(args[0], env))
        if h == "=>":
            self._arity(lst, 2, h)
            return Implies(self.formula(args[0], env), self.formula(args[1], env))
        if h == "<=>":
            self._arity(lst, 2, h)
            return Iff(self.formula(args[0], env), self.formula(args[1], env))
        if h == "ite":
            self._arity(lst, 3, h)
            return ite(self.formula(args[0], env), self.formula(args[1], env), self.formula(args[2], env))
        if h == "=":
            self._arity(lst, 2, h)
            a, b = self._pair(args[0], args[1], env)
            return Eq(a, b)
        if h == "distinct":
            terms = self._terms_same_sort(args, env)
            parts = [Not(Eq(terms[i], terms[j])) for i in range(len(terms)) for j in range(i + 1, len(terms))]
            return conj(*parts)
        if h in ("forall", "exists"):
            self._arity(lst, 2, h)
            binders = _list(args[0], h)
            inner = dict(env)
            vs = []
            for b in binders:
                bl = _list(b, "binder", 2)
                name = str(_sym(bl[0], "binder"))
                sort = str(_sym(bl[1], "binder"))
                if sort not in self.sig.sorts:
                    raise _err(f"unknown sort {sort!r}", bl[1], "binder")
                if name in inner:
                    name_new = self._fresh_bound(name, inner)
                else:
                    name_new = name
                v = Var(name_new, sort)
                inner[name] = v
                vs.append(v)
            body = self.formula(args[1], inner)
            return (Forall if h == "forall" else Exists)(tuple(vs), body)
        base, primed = self._split_prime(h, head)
        d = self.sig.preds.get(base)
        if d is None:
            raise _err(f"unknown predicate {base!r}", head, "formula")
        if primed:
            self._check_prime(d.tag, base, head)
        if len(args) != len(d.args):
            raise _err(f"{base} expects {len(d.args)} arguments, got {len(args)}", lst, "formula")
        targs = tuple(self.term(a, env, s) for a, s in zip(args, d.args))
        return Atom(base, targs, primed)

    def _arity(self, lst: SList, n: int, h: str) -> None:
        if len(lst) - 1 != n:
            raise _err(f"{h} expects {n} arguments", lst, "formula")

    def _pair(self, a: SExpr, b: SExpr, env: dict[str, Var]) -> tuple[Term, Term]:
        try:
            ta = self.term(a, env)
        except _Deferred:
            tb = self.term(b, env)
            return self.term(a, env, tb.sort), tb
        tb = self.term(b, env, ta.sort)
        return ta, tb

    def _terms_same_sort(self, xs: list, env: dict[str, Var]) -> list[Term]:
        out: list[Term] = []
        for x in xs:
            out.append(self.term(x, env, out[0].sort if out else None))
        return out

    # rules ------------------------------------------------------------

    def rule(self, x: SExpr, default_name: str) -> Rule:
        lst = _list(x, "rule", 2)
        kw = _head(lst)
        if kw not in ("rule", "fact"):
            raise _err("expected (rule NAME HEAD BODY..)", lst, "rule")
        name = str(_sym(lst[1], "rule"))
        rest = lst[2:]
        if not rest:
            raise _err("rule without head", lst, "rule")
        self.begin_rule(_collect_syms(lst))
        try:
            head = self._rule_atom(rest[0])
            body = []
            pending = list(rest[1:])
            # bind variables through atoms first so equalities can infer sorts
            atoms_first = [b for b in pending if _head(b) not in ("=", "not")]
            others = [b for b in pending if _head(b) in ("=", "not")]
            built: dict[int, Formula] = {}
            for b in atoms_first:
                built[id(b)] = self._rule_atom(b)
            for b in others:
                built[id(b)] = self._rule_literal(b)
            body = [built[id(b)] for b in pending]
        except _Deferred as d:
            raise _err(f"cannot infer the sort of rule variable {d.name!r}", lst, "rule")
        finally:
            self.end_rule()
        return Rule(name, head, tuple(body))

    def _rule_atom(self, x: SExpr) -> Atom:
        f = self.formula(x, {})
        if not isinstance(f, Atom):
            raise _err("rule heads and body atoms must be atomic", x, "rule")
        if f.primed:
            raise _err("primed atoms are not allowed in rules", x, "rule")
        return f

    def _rule_literal(self, x: SExpr) -> Formula:
        f = self.formula(x, {})
        g = f.arg if isinstance(f, Not) else f
        if not isinstance(g, Eq):
            raise _err("negation in rule bodies is limited to disequalities", x, "rule")
        return f


class _Deferred(Exception):
    def __init__(self, name: str) -> None:
        self.name = name


def _collect_syms(x: SExpr) -> set[str]:
    if isinstance(x, Sym):
        return {str(x)}
    out: set[str] = set()
    for y in x:
        out |= _collect_syms(y)
    return out


# ---------------------------------------------------------------- declarations


def _decl_list(x: SExpr, production: str) -> list[SList]:
    lst = _list(x, production, 1)
    return [_list(d, production, 1) for d in lst[1:]]


def _declare_sorts(sig: Signature, block: SList, tag: str) -> None:
    for s in block[1:]:
        name = str(_sym(s, "sorts"))
        try:
            sig.add_sort(Sort(name, UNINTERPRETED, (), tag))
        except ValueError as e:
            raise _err(str(e), s, "sorts")


def _declare_funs(sig: Signature, block: SList, tag: str) -> None:
    for d in _decl_list(block, "funs"):
        if len(d) < 2:
            raise _err("function declaration needs a result sort", d, "funs")
        name = str(_sym(d[0], "funs"))
        sorts = tuple(str(_sym(s, "funs")) for s in d[1:])
        try:
            sig.add_fun(FunDecl(name, sorts[:-1], sorts[-1], tag))
        except (ValueError, SortError) as e:
            raise _err(str(e), d, "funs")


def _declare_preds(sig: Signature, block: SList, tag: str) -> None:
    for d in _decl_list(block, "preds"):
        name = str(_sym(d[0], "preds"))
        sorts = tuple(str(_sym(s, "preds")) for s in d[1:])
        try:
            sig.add_pred(PredDecl(name, sorts, tag))
        except (ValueError, SortError) as e:
            raise _err(str(e), d, "preds")


def _blocks(x: SList, allowed: tuple, production: str) -> dict[str, list[SList]]:
    out: dict[str, list[SList]] = {}
    for b in x:
        h = _head(b)
        if h is None or h not in allowed:
            raise _err(f"unexpected block {h or b!r}; expected one of {', '.join(allowed)}", b, production)
        out.setdefault(h, []).append(b)
    return out


# ---------------------------------------------------------------- system


def _parse_system(x: SList) -> TwoLevelSystem:
    if len(x) < 2:
        raise _err("system needs a name", x, "system")
    name = str(_sym(x[1], "system"))
    blocks = _blocks(
        x[2:],
        ("substrate", "wf", "pm", "statevars", "statepreds", "init", "transition"),
        "system",
    )
    sig = Signature()
    # substrate
    id_mode = "edt"
    sub_sorts: list[str] = []
    for b in blocks.get("substrate", []):
        for d in b[1:]:
            dl = _list(d, "substrate", 2)
            kind = str(_sym(dl[0], "substrate"))
            sname = str(_sym(dl[1], "substrate"))
            consts = tuple(str(_sym(c, "substrate")) for c in dl[2:])
            try:
                if kind == "enum":
                    if not consts:
                        raise _err(f"enumerated sort {sname} needs constants", dl, "substrate")
                    if len(set(consts)) != len(consts):
                        raise _err(f"duplicate constants in {sname}", dl, "substrate")
                    sig.add_sort(Sort(sname, ENUMERATED, consts, SUBSTRATE))
                elif kind == "equiv":
                    if sname != ID_SORT:
                        raise _err("only the Id sort may use the equivalence substrate", dl, "substrate")
                    id_mode = "equiv"
                    sig.add_sort(Sort(sname, UNINTERPRETED, (), SUBSTRATE))
                    for c in consts:
                        sig.add_fun(FunDecl(c, (), sname, SUBSTRATE))
                else:
                    raise _err(f"unknown substrate kind {kind!r}", dl[0], "substrate")
            except ValueError as e:
                raise _err(str(e), dl, "substrate")
            sub_sorts.append(sname)
    if ID_SORT not in sub_sorts:
        id_mode = "none"
    substrate = Substrate(id_mode, tuple(sorted(sub_sorts, key=lambda s: (s != ID_SORT, sub_sorts.index(s)))))

    # declarations of both theories come before any formula
    wf_blocks = blocks.get("wf", [])
    pm_blocks = blocks.get("pm", [])
    for tag, blist in ((WF, wf_blocks), (PM, pm_blocks)):
        for b in blist:
            for sb in b[1:]:
                if _head(sb) == "sorts":
                    _declare_sorts(sig, sb, tag)
    for tag, blist in ((WF, wf_blocks), (PM, pm_blocks)):
        for b in blist:
            for sb in b[1:]:
                h = _head(sb)
                if h in ("consts", "funs"):
                    _declare_funs(sig, sb, tag)
                elif h == "preds":
                    _declare_preds(sig, sb, tag)
                elif h not in ("sorts", "axioms", "rules", "mode"):
                    raise _err(f"unexpected block {h!r}", sb, tag)
    state_vars: list[str] = []
    for b in blocks.get("statevars", []):
        for d in _decl_list(b, "statevars"):
            if len(d) != 2:
                raise _err("state variable declaration is (name Sort)", d, "statevars")
            n = str(_sym(d[0], "statevars"))
            try:
                sig.add_fun(FunDecl(n, (), str(_sym(d[1], "statevars")), STATE_VAR))
            except (ValueError, SortError) as e:
                raise _err(str(e), d, "statevars")
            state_vars.append(n)
    state_preds: list[str] = []
    for b in blocks.get("statepreds", []):
        for d in _decl_list(b, "statepreds"):
            n = str(_sym(d[0], "statepreds"))
            try:
                sig.add_pred(PredDecl(n, tuple(str(_sym(s, "statepreds")) for s in d[1:]), STATE_PRED))
            except (ValueError, SortError) as e:
                raise _err(str(e), d, "statepreds")
            state_preds.append(n)

    el = Elaborator(sig)
    axioms: list[Axiom] = []
    for b in wf_blocks:
        for sb in b[1:]:
            if _head(sb) == "axioms":
                for i, a in enumerate(sb[1:]):
                    if _head(a) == "axiom":
                        al = _list(a, "axiom", 3)
                        axioms.append(Axiom(str(_sym(al[1], "axiom")), el.formula(al[2], {})))
                    else:
                        axioms.append(Axiom(f"axiom{len(axioms) + 1}", el.formula(a, {})))
    mode, depth = "datalog", 6
    rules: list[Rule] = []
    for b in pm_blocks:
        for sb in b[1:]:
            h = _head(sb)
            if h == "mode":
                ml = _list(sb, "mode", 2)
                mode = str(_sym(ml[1], "mode"))
                if mode not in ("datalog", "horn"):
                    raise _err("mode is datalog or horn", ml[1], "mode")
                if mode == "horn" and len(ml) < 3:
                    raise _err("horn mode needs a depth bound: (mode horn K)", ml, "mode")
                if len(ml) > 2:
                    try:
                        depth = int(str(ml[2]))
                    except ValueError:
                        raise _err("horn depth must be an integer", ml[2], "mode")
                    if depth < 1:
                        raise _err("horn depth must be positive", ml[2], "mode")
            elif h == "rules":
                for r in sb[1:]:
                    rules.append(el.rule(r, f"rule{len(rules) + 1}"))
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise _err("duplicate rule names", x, "rules")

    inits = blocks.get("init", [])
    if len(inits) > 1:
        raise _err("several init blocks", inits[1], "init")
    init = _parse_init(el, inits[0] if inits else None, sig, state_preds)
    transitions = []
    for b in blocks.get("transition", []):
        transitions.append(_parse_transition(el, b, sig, state_vars, state_preds))
    tnames = [t.name for t in transitions]
    if len(set(tnames)) != len(tnames):
        raise _err("duplicate transition names", x, "transition")
    return TwoLevelSystem(
        name, sig, substrate, tuple(axioms), HornTheory(tuple(rules), mode, depth),
        tuple(state_vars), tuple(state_preds), init, tuple(transitions),
    )


def _binders(el: Elaborator, x: SExpr, production: str) -> tuple:
    out = []
    for d in _decl_list(x, production):
        if len(d) != 2:
            raise _err("binder is (name Sort)", d, production)
        n = str(_sym(d[0], production))
        s = str(_sym(d[1], production))
        if s not in el.sig.sorts:
            raise _err(f"unknown sort {s!r}", d[1], production)
        if n in el.sig.funs or n in el.sig.preds:
            raise _err(f"variable {n} clashes with a declared symbol", d[0], production)
        out.append(Var(n, s))
    return tuple(out)


def _pred_update(el: Elaborator, ul: SList, env: dict[str, Var], pred: str, production: str) -> PredicateUpdate:
    d = el.sig.preds[pred]
    params_x = _list(ul[2], production)
    if len(params_x) != len(d.args):
        raise _err(f"{pred} has {len(d.args)} parameters", params_x, production)
    params = []
    inner = dict(env)
    for p, s in zip(params_x, d.args):
        n = str(_sym(p, production))
        if n in env:
            raise _err(f"parameter {n} clashes with a witness variable", p, production)
        v = Var(n, s)
        params.append(v)
        inner[n] = v
    return PredicateUpdate(tuple(params), el.formula(ul[3], inner))


def _parse_init(el: Elaborator, b: Optional[SList], sig: Signature, state_preds: list[str]) -> InitialCondition:
    if b is None:
        return InitialCondition((), TRUE, tuple(
            (p, PredicateUpdate(tuple(Var(f"z{i}", s) for i, s in enumerate(sig.preds[p].args)), FALSE))
            for p in state_preds
        ))
    ids: tuple = ()
    wf = TRUE
    parts: dict[str, PredicateUpdate] = {}
    for sb in b[1:]:
        h = _head(sb)
        if h == "ids":
            ids = _binders(el, sb, "init")
        elif h == "wf":
            pass
        elif h == "pred":
            pass
        else:
            raise _err(f"unexpected init block {h!r}", sb, "init")
    env = {v.name: v for v in ids}
    for sb in b[1:]:
        h = _head(sb)
        if h == "wf":
            wf = el.formula(_list(sb, "init", 2)[1], env)
        elif h == "pred":
            ul = _list(sb, "init", 4)
            p = str(_sym(ul[1], "init"))
            if p not in state_preds:
                raise _err(f"{p} is not a state predicate", ul[1], "init")
            parts[p] = _pred_update(el, ul, env, p, "init")
    missing = [p for p in state_preds if p not in parts]
    if missing:
        raise _err(f"init gives no definition for {', '.join(missing)}", b, "init")
    return InitialCondition(ids, wf, tuple((p, parts[p]) for p in state_preds))


def _parse_transition(el: Elaborator, b: SList, sig: Signature, state_vars: list[str], state_preds: list[str]) -> Transition:
    if len(b) < 2:
        raise _err("transition needs a name", b, "transition")
    name = str(_sym(b[1], "transition"))
    ids: tuple = ()
    data: tuple = ()
    for sb in b[2:]:
        h = _head(sb)
        if h == "ids":
            ids = _binders(el, sb, "transition")
        elif h == "data":
            data = _binders(el, sb, "transition")
        elif h not in ("guard", "update"):
            raise _err(f"unexpected transition block {h!r}", sb, "transition")
    for v in data:
        if sig.is_substrate_sort(v.sort) and v.sort == ID_SORT:
            raise _err(f"data variable {v.name} has sort Id; declare it under ids", b, "transition")
    env = {v.name: v for v in ids + data}
    if len(env) != len(ids) + len(data):
        raise _err("duplicate witness variables", b, "transition")
    guard = TRUE
    wf_up: dict[str, Term] = {}
    pm_up: dict[str, PredicateUpdate] = {}
    for sb in b[2:]:
        h = _head(sb)
        if h == "guard":
            guard = el.formula(_list(sb, "guard", 2)[1], env)
        elif h == "update":
            ul = _list(sb, "update", 3)
            target = str(_sym(ul[1], "update"))
            if target in state_vars:
                if len(ul) != 3:
                    raise _err("state variable update is (update x TERM)", ul, "update")
                if target in wf_up:
                    raise _err(f"{target} updated twice", ul, "update")
                wf_up[target] = el.term(ul[2], env, sig.funs[target].result)
            elif target in state_preds:
                if len(ul) != 4:
                    raise _err("predicate update is (update p (z..) FORMULA)", ul, "update")
                if target in pm_up:
                    raise _err(f"{target} updated twice", ul, "update")
                pm_up[target] = _pred_update(el, ul, env, target, "update")
            else:
                raise _err(f"{target} is not a state symbol", ul[1], "update")
    wf_updates = tuple((x, wf_up.get(x, App(x, (), sig.funs[x].result))) for x in state_vars)
    pm_updates = []
    for p in state_preds:
        if p in pm_up:
            pm_updates.append((p, pm_up[p]))
        else:
            params = tuple(Var(f"z{i + 1}", s) for i, s in enumerate(sig.preds[p].args))
            pm_updates.append((p, PredicateUpdate(params, Atom(p, params))))
    return Transition(name, ids, data, guard, wf_updates, tuple(pm_updates))


# ---------------------------------------------------------------- tasks


def _pick_system(systems: dict, lst: SList, production: str) -> tuple[TwoLevelSystem, list]:
    rest = list(lst[2:])
    sysname = None
    for item in list(rest):
        if _head(item) == "system":
            sysname = str(_sym(_list(item, production, 2)[1], production))
            rest.remove(item)
    if sysname is None:
        if len(systems) != 1:
            raise _err("name the system with (system NAME)", lst, production)
        return next(iter(systems.values())), rest
    if sysname not in systems:
        raise _err(f"unknown system {sysname!r}", lst, production)
    return systems[sysname], rest


def _parse_scenario(x: SList, systems: dict) -> Scenario:
    if len(x) < 2:
        raise _err("scenario needs a name", x, "scenario")
    name = str(_sym(x[1], "scenario"))
    system, rest = _pick_system(systems, x, "scenario")
    el = Elaborator(system.sig)
    states: list[Formula] = []
    steps: list[str] = []
    expect_state = True
    for item in rest:
        h = _head(item)
        if h == "state":
            if not expect_state:
                raise _err("two states in a row; insert a (step ..)", item, "scenario")
            il = _list(item, "scenario", 2)
            if isinstance(il[1], Sym) and str(il[1]) == "init":
                f = expand_finite_quantifiers(system.init.formula(), system.enum_domains())
            else:
                f = el.formula(il[1], {})
            states.append(f)
            expect_state = False
        elif h == "step":
            if expect_state:
                raise _err("step without a preceding state", item, "scenario")
            t = str(_sym(_list(item, "scenario", 2)[1], "scenario"))
            try:
                system.transition(t)
            except KeyError:
                raise _err(f"unknown transition {t!r}", item, "scenario")
            steps.append(t)
            expect_state = True
        else:
            raise _err(f"unexpected scenario item {h!r}", item, "scenario")
    if expect_state:
        raise _err("scenario must alternate states and steps and end with a state", x, "scenario")
    return Scenario(name, system.name, tuple(states), tuple(steps))


def _parse_invariant(x: SList, systems: dict) -> InvariantTask:
    if len(x) < 2:
        raise _err("invariant needs a name", x, "invariant")
    name = str(_sym(x[1], "invariant"))
    system, rest = _pick_system(systems, x, "invariant")
    el = Elaborator(system.sig)
    target = None
    cand = None
    for item in rest:
        h = _head(item)
        if h == "always":
            target = el.formula(_list(item, "invariant", 2)[1], {})
        elif h == "candidate":
            cand = el.formula(_list(item, "invariant", 2)[1], {})
        else:
            raise _err(f"unexpected invariant item {h!r}", item, "invariant")
    if target is None:
        raise _err("invariant needs (always FORMULA)", x, "invariant")
    return InvariantTask(name, system.name, target, cand)


def parse_spec(text: str, path: Optional[str] = None) -> SpecFile:
    """Parse a .sospec document."""
    systems: dict[str, TwoLevelSystem] = {}
    scenarios: list[Scenario] = []
    invariants: list[InvariantTask] = []
    for x in read_all(text):
        h = _head(x)
        if h == "system":
            s = _parse_system(x)
            if s.name in systems:
                raise _err(f"duplicate system {s.name}", x, "system")
            systems[s.name] = s
        elif h == "scenario":
            scenarios.append(_parse_scenario(x, systems))
        elif h == "invariant":
            invariants.append(_parse_invariant(x, systems))
        else:
            raise _err(f"unexpected top-level form {h or x!r}", x, "toplevel")
    if not systems:
        raise SpecError("no system declared", 1, 1, "toplevel")
    names = [s.name for s in scenarios] + [t.name for t in invariants]
    if len(set(names)) != len(names):
        raise SpecError("duplicate task names", 1, 1, "toplevel")
    return SpecFile(systems, tuple(scenarios), tuple(invariants), path)


def parse_spec_file(path: str) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), path)


def parse_formula(text: str, sig: Signature, allow_primes: bool = False) -> Formula:
    """Parse a single closed formula."""
    xs = read_all(text)
    if len(xs) != 1:
        raise SpecError("expected exactly one formula", 1, 1, "formula")
    return Elaborator(sig, allow_primes).formula(xs[0], {})


def parse_rule(text: str, sig: Signature) -> Rule:
    xs = read_all(text)
    if len(xs) != 1:
        raise SpecError("expected exactly one rule", 1, 1, "rule")
    return Elaborator(sig).rule(xs[0], "rule")


# ---------------------------------------------------------------- solve files


class SolveQuery:
    """Contents of a solve file: assertions, extra symbols and rules."""

    def __init__(self, sig: Signature, formula: Formula, rules: tuple, mode: Optional[str], universal: tuple) -> None:
        self.sig = sig
        self.formula = formula
        self.rules = rules
        self.mode = mode
        self.universal = universal


def parse_solve(text: str, system: TwoLevelSystem) -> SolveQuery:
    """Parse a solve file against a system.  Accepted forms::

        (mode edt|equiv)
        (declare-const NAME SORT)
        (declare-pred NAME SORT..)
        (rule NAME HEAD BODY..)
        (assert FORMULA)
        (assert-forall FORMULA)     ; universal part, instantiated over Id representatives
        FORMULA                     ; same as (assert FORMULA)
    """
    sig = system.sig.copy()
    xs = read_all(text)
    mode = None
    for x in xs:
        h = _head(x)
        try:
            if h == "declare-const":
                xl = _list(x, "solve", 3)
                s = str(_sym(xl[2], "solve"))
                tag = SUBSTRATE if s in sig.sorts and sig.is_substrate_sort(s) else (
                    sig.sorts[s].tag if s in sig.sorts else WF)
                sig.add_fun(FunDecl(str(_sym(xl[1], "solve")), (), s, tag))
            elif h == "declare-pred":
                xl = _list(x, "solve", 2)
                sig.add_pred(PredDecl(str(_sym(xl[1], "solve")), tuple(str(_sym(s, "solve")) for s in xl[2:]), PM))
        except (ValueError, SortError) as e:
            raise _err(str(e), x, "solve")
    el = Elaborator(sig, allow_primes=True)
    parts: list[Formula] = []
    universal: list[Formula] = []
    rules: list[Rule] = []
    for x in xs:
        h = _head(x)
        if h in ("declare-const", "declare-pred"):
            continue
        if h == "mode":
            mode = str(_sym(_list(x, "solve", 2)[1], "solve"))
            if mode not in ("edt", "equiv"):
                raise _err("mode is edt or equiv", x, "solve")
        elif h in ("rule", "fact"):
            rules.append(el.rule(x, f"extra{len(rules) + 1}"))
        elif h == "assert":
            parts.append(el.formula(_list(x, "solve", 2)[1], {}))
        elif h == "assert-forall":
            universal.append(el.formula(_list(x, "solve", 2)[1], {}))
        else:
            parts.append(el.formula(x, {}))
    return SolveQuery(sig, conj(*parts), tuple(rules), mode, tuple(universal))
