"""Two-level system descriptions: substrate, workflow and policy theories,
state symbols, initial condition, transitions and verification tasks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..logic.syntax import (
    PM, STATE_PRED, WF, App, Atom, Eq,
    Exists, Formula, Iff, Signature, Term, conj, forall,
)
from ..logic.transform import PredicateUpdate

ID_SORT = "Id"


@dataclass(frozen=True)
class Rule:
    """Horn clause head <- body.  Body literals are atoms, equalities and
    negated equalities; a rule with empty body is a fact."""

    name: str
    head: Atom
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return not self.body


@dataclass(frozen=True)
class HornTheory:
    rules: tuple = ()
    mode: str = "datalog"  # "datalog" or "horn"
    depth: int = 6


@dataclass(frozen=True)
class Axiom:
    name: str
    formula: Formula


@dataclass(frozen=True)
class Substrate:
    """Shared theory.  id_mode is "edt" when Id is an enumerated datatype and
    "equiv" when Id only carries equality."""

    id_mode: str
    sorts: tuple  # names of substrate sorts, Id first when present


@dataclass(frozen=True)
class Transition:
    name: str
    id_vars: tuple
    data_vars: tuple
    guard: Formula
    wf_updates: tuple  # ((state var name, Term), ...) in declaration order
    pm_updates: tuple  # ((state pred name, PredicateUpdate), ...)

    @property
    def witnesses(self) -> tuple:
        return self.id_vars + self.data_vars

    def wf_update_map(self) -> dict[str, Term]:
        return dict(self.wf_updates)

    def pm_update_map(self) -> dict[str, PredicateUpdate]:
        return dict(self.pm_updates)

    def formula(self, sig: Signature) -> Formula:
        """The full transition formula with primed targets."""
        parts = [self.guard]
        for x, t in self.wf_updates:
            d = sig.funs[x]
            parts.append(Eq(App(x, (), d.result, True), t))
        for p, u in self.pm_updates:
            parts.append(forall(u.params, Iff(Atom(p, u.params, True), u.body)))
        body = conj(*parts)
        return Exists(self.witnesses, body) if self.witnesses else body


@dataclass(frozen=True)
class InitialCondition:
    id_vars: tuple
    wf_part: Formula
    pm_parts: tuple  # ((pred, PredicateUpdate), ...)

    def formula(self) -> Formula:
        parts = [self.wf_part]
        for p, u in self.pm_parts:
            parts.append(forall(u.params, Iff(Atom(p, u.params), u.body)))
        return forall(self.id_vars, conj(*parts))


@dataclass(eq=False)
class TwoLevelSystem:
    name: str
    sig: Signature
    substrate: Substrate
    wf_axioms: tuple
    pm: HornTheory
    state_vars: tuple  # names
    state_preds: tuple  # names
    init: InitialCondition
    transitions: tuple

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TwoLevelSystem):
            return NotImplemented
        return (
            self.name == other.name
            and _sig_eq(self.sig, other.sig)
            and self.substrate == other.substrate
            and self.wf_axioms == other.wf_axioms
            and self.pm == other.pm
            and self.state_vars == other.state_vars
            and self.state_preds == other.state_preds
            and self.init == other.init
            and self.transitions == other.transitions
        )

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(f"no transition named {name!r}")

    @property
    def id_sort(self) -> Optional[str]:
        return ID_SORT if ID_SORT in self.sig.sorts and self.sig.is_substrate_sort(ID_SORT) else None

    def pred_level(self, name: str) -> str:
        """Theory that owns a predicate: WF or PM.  State predicates whose
        arguments include a private workflow sort live on the workflow side."""
        d = self.sig.preds[name]
        if d.tag == STATE_PRED:
            if any(self.sig.sort_tag(s) == WF for s in d.args):
                return WF
            return PM
        return PM if d.tag == PM else WF

    def pm_state_preds(self) -> list[str]:
        return [p for p in self.state_preds if self.pred_level(p) == PM]

    def state_var_term(self, name: str, primed: bool = False) -> App:
        return App(name, (), self.sig.funs[name].result, primed)

    def enum_domains(self) -> dict[str, list[App]]:
        return {
            s: [App(c, (), s) for c in cs]
            for s, cs in self.sig.enumerated_sorts().items()
        }


def _sig_eq(a: Signature, b: Signature) -> bool:
    return a.sorts == b.sorts and a.funs == b.funs and a.preds == b.preds


@dataclass(frozen=True)
class Scenario:
    name: str
    system: str
    states: tuple  # formulas phi_0 .. phi_n
    steps: tuple  # transition names tau_1 .. tau_n


@dataclass(frozen=True)
class InvariantTask:
    name: str
    system: str
    target: Formula
    candidate: Optional[Formula] = None


@dataclass(eq=False)
class SpecFile:
    systems: dict
    scenarios: tuple = ()
    invariants: tuple = ()
    path: Optional[str] = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpecFile):
            return NotImplemented
        return (
            self.systems == other.systems
            and self.scenarios == other.scenarios
            and self.invariants == other.invariants
        )

    def system(self, name: Optional[str] = None) -> TwoLevelSystem:
        if name is None:
            if len(self.systems) != 1:
                raise KeyError("spec declares several systems; name one")
            return next(iter(self.systems.values()))
        return self.systems[name]

    def scenario(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(f"no scenario named {name!r}")

    def invariant(self, name: str) -> InvariantTask:
        for t in self.invariants:
            if t.name == name:
                return t
        raise KeyError(f"no invariant named {name!r}")
