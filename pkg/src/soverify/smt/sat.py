"""DPLL search with chronological backtracking.

Literals are non-zero ints (+v / -v).  Assumptions are assigned first; when
the search fails, the set of assumptions that the refutation depended on is
returned as a core.  Dependencies are tracked through implication reasons
and through flipped decisions, so a branch whose conflict does not involve
the latest decision is abandoned without trying its other phase.

An optional theory hook is told about every assignment of a theory variable
and may report a conflict as a list of currently true literals; the negated
list is learned as a permanent clause.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol


class TheoryHook(Protocol):
    def is_theory_var(self, v: int) -> bool: ...

    def assert_lit(self, lit: int) -> Optional[list[int]]: ...

    def checkpoint(self) -> int: ...

    def backtrack(self, mark: int) -> None: ...

    def final_check(self) -> Optional[list[int]]: ...


@dataclass
class SolveResult:
    sat: bool
    model: dict = field(default_factory=dict)
    core: frozenset = frozenset()


_ASSUMPTION = "A"


class Dpll:
    def __init__(self) -> None:
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.occ: dict[int, list[int]] = {}
        self.value: list[Optional[bool]] = [None]
        self.reason: list = [None]
        self.trail: list[int] = []
        self.tmarks: list[int] = []
        self.theory: Optional[TheoryHook] = None
        self.decision_order: list[int] = []
        self.stats = {"decisions": 0, "conflicts": 0, "learned": 0}
        self._qhead = 0
        self._empty = False

    # ------------------------------------------------------------ building

    def new_var(self) -> int:
        self.nvars += 1
        self.value.append(None)
        self.reason.append(None)
        self.occ[self.nvars] = []
        self.occ[-self.nvars] = []
        return self.nvars

    def add_clause(self, lits: Iterable[int]) -> Optional[int]:
        seen: list[int] = []
        for l in lits:
            if -l in seen:
                return None  # tautology
            if l not in seen:
                seen.append(l)
        if not seen:
            self._empty = True
            return None
        idx = len(self.clauses)
        self.clauses.append(seen)
        for l in seen:
            self.occ[l].append(idx)
        return idx

    # ------------------------------------------------------------ assignment

    def _lit_value(self, l: int) -> Optional[bool]:
        v = self.value[abs(l)]
        if v is None:
            return None
        return v if l > 0 else not v

    def _assign(self, lit: int, reason) -> Optional[tuple]:
        v = abs(lit)
        self.tmarks.append(self.theory.checkpoint() if self.theory else 0)
        self.value[v] = lit > 0
        self.reason[v] = reason
        self.trail.append(lit)
        if self.theory is not None and self.theory.is_theory_var(v):
            expl = self.theory.assert_lit(lit)
            if expl is not None:
                return ("T", expl)
        return None

    def _undo(self, mark: int) -> None:
        if len(self.trail) <= mark:
            return
        if self.theory is not None:
            self.theory.backtrack(self.tmarks[mark])
        while len(self.trail) > mark:
            lit = self.trail.pop()
            self.tmarks.pop()
            self.value[abs(lit)] = None
            self.reason[abs(lit)] = None
        self._qhead = min(self._qhead, mark)

    def reset(self) -> None:
        self._undo(0)
        self._qhead = 0

    def _propagate(self) -> Optional[tuple]:
        while self._qhead < len(self.trail):
            lit = self.trail[self._qhead]
            self._qhead += 1
            for ci in self.occ[-lit]:
                clause = self.clauses[ci]
                unassigned = 0
                last = 0
                sat = False
                for l in clause:
                    val = self._lit_value(l)
                    if val is None:
                        unassigned += 1
                        last = l
                        if unassigned > 1:
                            break
                    elif val:
                        sat = True
                        break
                if sat or unassigned > 1:
                    continue
                if unassigned == 0:
                    return ("C", ci)
                conf = self._assign(last, ("C", ci))
                if conf is not None:
                    return conf
        return None

    def _unit_scan(self) -> Optional[tuple]:
        """Assign unit clauses and detect falsified clauses at the root."""
        changed = True
        while changed:
            changed = False
            for ci, clause in enumerate(self.clauses):
                unassigned = [l for l in clause if self._lit_value(l) is None]
                if any(self._lit_value(l) for l in clause):
                    continue
                if not unassigned:
                    return ("C", ci)
                if len(unassigned) == 1:
                    conf = self._assign(unassigned[0], ("C", ci))
                    if conf is not None:
                        return conf
                    conf = self._propagate()
                    if conf is not None:
                        return conf
                    changed = True
        return None

    # ------------------------------------------------------------ dependencies

    def _deps(self, conflict: tuple) -> set:
        kind, data = conflict
        if kind == "C":
            start = [abs(l) for l in self.clauses[data]]
        elif kind == "T":
            start = [abs(l) for l in data]
        else:  # explicit dependency set
            return set(data)
        out: set = set()
        seen: set[int] = set()
        stack = list(start)
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            r = self.reason[v]
            if r is None:
                out.add(("d", v))
            elif r == _ASSUMPTION:
                out.add(("a", v if self.value[v] else -v))
            elif r[0] == "F":
                out |= r[1]
            else:
                for l in self.clauses[r[1]]:
                    if abs(l) != v:
                        stack.append(abs(l))
        return out

    def _learn(self, conflict: tuple) -> None:
        if conflict[0] == "T":
            self.add_clause([-l for l in conflict[1]])
            self.stats["learned"] += 1

    # ------------------------------------------------------------ search

    def _pick(self) -> Optional[int]:
        for v in self.decision_order:
            if self.value[v] is None:
                return v
        for v in range(1, self.nvars + 1):
            if self.value[v] is None:
                return v
        return None

    def solve(
        self,
        assumptions: Iterable[int] = (),
        theory: Optional[TheoryHook] = None,
    ) -> SolveResult:
        """Search for a total assignment.  On success the assignment is left
        in place (call reset() before the next structural change); on
        failure the solver is reset and the core is returned."""
        self.reset()
        self.theory = theory
        if self._empty:
            return SolveResult(False, core=frozenset())
        conflict = self._unit_scan()
        if conflict is None:
            for a in assumptions:
                val = self._lit_value(a)
                if val is True:
                    continue
                if val is False:
                    d = self._deps(("T", [-a]))
                    d.add(("a", a))
                    conflict = ("D", frozenset(d))
                    break
                conflict = self._assign(a, _ASSUMPTION)
                if conflict is None:
                    conflict = self._propagate()
                if conflict is not None:
                    break
        if conflict is not None and conflict[0] != "D":
            self._learn(conflict)
            d = self._deps(conflict)
            self.reset()
            return SolveResult(False, core=frozenset(l for k, l in d if k == "a"))
        if conflict is not None:
            self.reset()
            return SolveResult(False, core=frozenset(l for k, l in conflict[1] if k == "a"))
        root = len(self.trail)
        stack: list[list] = []  # [var, phase_index, trail_mark]
        conflict = None
        while True:
            if conflict is None:
                v = self._pick()
                if v is None:
                    if theory is not None:
                        expl = theory.final_check()
                        if expl is not None:
                            conflict = ("T", expl)
                    if conflict is None:
                        model = {i: bool(self.value[i]) for i in range(1, self.nvars + 1)}
                        return SolveResult(True, model=model)
                else:
                    self.stats["decisions"] += 1
                    stack.append([v, 0, len(self.trail)])
                    conflict = self._assign(-v, None)
                    if conflict is None:
                        conflict = self._propagate()
                    continue
            self.stats["conflicts"] += 1
            self._learn(conflict)
            deps = self._deps(conflict)
            conflict = None
            while True:
                if not stack:
                    self._undo(root)
                    self.reset()
                    return SolveResult(False, core=frozenset(l for k, l in deps if k == "a"))
                frame = stack[-1]
                v, phase, mark = frame
                self._undo(mark)
                if phase == 0 and ("d", v) in deps:
                    frame[1] = 1
                    flip = frozenset(deps - {("d", v)})
                    conflict = self._assign(v, ("F", flip))
                    if conflict is None:
                        conflict = self._propagate()
                    break
                stack.pop()
                deps.discard(("d", v))
            if conflict is None:
                continue


class BoolEnumerator:
    """Produces total assignments of a clause set, one per call to next;
    clauses added between calls prune later assignments."""

    def __init__(self, nvars: int, clauses: Iterable[Iterable[int]], order: Optional[list[int]] = None) -> None:
        self.solver = Dpll()
        for _ in range(nvars):
            self.solver.new_var()
        for c in clauses:
            self.solver.add_clause(c)
        self.solver.decision_order = list(order) if order else list(range(1, nvars + 1))
        self.exhausted = False

    def next(self) -> Optional[dict[int, bool]]:
        if self.exhausted:
            return None
        r = self.solver.solve()
        if not r.sat:
            self.exhausted = True
            return None
        self.solver.reset()
        return r.model

    def block(self, clause: Iterable[int]) -> None:
        self.solver.reset()
        self.solver.add_clause(clause)


def bool_enumerate(nvars: int, clauses: Iterable[Iterable[int]]):
    """Yield satisfying total assignments, blocking each one after it is
    produced."""
    en = BoolEnumerator(nvars, clauses)
    while True:
        m = en.next()
        if m is None:
            return
        yield m
        en.block([-v if m[v] else v for v in range(1, nvars + 1)])
