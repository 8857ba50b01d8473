"""Backtrackable congruence closure with proof-forest explanations.

Nodes are registered once (ground terms, plus predicate atoms that are
modelled as nodes merged with TRUE or FALSE).  Merges and disequalities
carry an opaque reason tag; a conflict is reported as the set of reason
tags that entail it.  All mutations after registration are logged so that
backtrack(mark) restores the state exactly.
"""
from __future__ import annotations

from collections import deque
from typing import Hashable, Optional

TRUE_KEY = ("#bool", True)
FALSE_KEY = ("#bool", False)


class _Cong:
    """Proof-forest edge label for a merge implied by congruence."""

    __slots__ = ("p", "q")

    def __init__(self, p: int, q: int) -> None:
        self.p, self.q = p, q


class CongruenceClosure:
    def __init__(self) -> None:
        self.keys: list = []          # node -> (symbol key, arg node ids)
        self.ids: dict = {}           # (symbol key, arg ids) -> node
        self.obj: list = []           # node -> the registered object (term/atom)
        self.parent: list[int] = []
        self.size: list[int] = []
        self.uses: list[list[int]] = []
        self.label: list[Optional[int]] = []
        self.edges: list[list[tuple[int, object]]] = []
        self.sigtable: dict = {}
        self.diseqs: list[tuple[int, int, object]] = []
        self.trail: list[tuple] = []
        self.true = self._node(TRUE_KEY, (), None)
        self.false = self._node(FALSE_KEY, (), None)
        self.set_distinct(self.true)
        self.set_distinct(self.false)

    # -------------------------------------------------------------- nodes

    def _node(self, key, args: tuple, obj) -> int:
        full = (key, args)
        if full in self.ids:
            return self.ids[full]
        n = len(self.keys)
        self.keys.append(full)
        self.ids[full] = n
        self.obj.append(obj)
        self.parent.append(n)
        self.size.append(1)
        self.uses.append([])
        self.label.append(None)
        self.edges.append([])
        if args:
            sig = (key, tuple(self.find(a) for a in args))
            for r in set(sig[1]):
                self.uses[r].append(n)
            other = self.sigtable.get(sig)
            if other is None:
                self.sigtable[sig] = n
            elif self.find(other) != n:
                # only legal outside search; congruent to an existing node
                self._merge(n, other, _Cong(n, other))
        return n

    def add_node(self, key: Hashable, args: tuple = (), obj=None) -> int:
        """Register an application node; args are node ids."""
        return self._node(key, tuple(args), obj)

    def set_distinct(self, n: int) -> None:
        """Mark n as a distinct constant: two distinct nodes never merge."""
        r = self.find(n)
        if self.label[r] is None:
            self.label[r] = n

    def find(self, n: int) -> int:
        while self.parent[n] != n:
            n = self.parent[n]
        return n

    # -------------------------------------------------------------- search

    def checkpoint(self) -> int:
        return len(self.trail)

    def backtrack(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            kind = entry[0]
            if kind == "union":
                _, ra, rb, size_rb, label_rb, uses_len = entry
                self.parent[ra] = ra
                self.size[rb] = size_rb
                self.label[rb] = label_rb
                del self.uses[rb][uses_len:]
            elif kind == "sig":
                del self.sigtable[entry[1]]
            elif kind == "edge":
                self.edges[entry[1]].pop()
                self.edges[entry[2]].pop()
            elif kind == "diseq":
                self.diseqs.pop()

    def merge(self, a: int, b: int, reason) -> Optional[set]:
        """Assert a = b.  Returns None, or the reason set of a conflict."""
        conf = self._merge(a, b, reason)
        if conf is not None:
            return conf
        return self._check_diseqs()

    def assert_diseq(self, a: int, b: int, reason) -> Optional[set]:
        self.diseqs.append((a, b, reason))
        self.trail.append(("diseq",))
        if self.find(a) == self.find(b):
            return self.explain(a, b) | {reason}
        return None

    def _check_diseqs(self) -> Optional[set]:
        for a, b, reason in self.diseqs:
            if self.find(a) == self.find(b):
                return self.explain(a, b) | {reason}
        return None

    def _merge(self, a: int, b: int, reason) -> Optional[set]:
        pending = [(a, b, reason)]
        while pending:
            x, y, why = pending.pop()
            rx, ry = self.find(x), self.find(y)
            if rx == ry:
                continue
            self.edges[x].append((y, why))
            self.edges[y].append((x, why))
            self.trail.append(("edge", x, y))
            if self.size[rx] > self.size[ry]:
                rx, ry = ry, rx
            lx, ly = self.label[rx], self.label[ry]
            if lx is not None and ly is not None:
                return self.explain(lx, ly)
            self.trail.append(("union", rx, ry, self.size[ry], ly, len(self.uses[ry])))
            self.parent[rx] = ry
            self.size[ry] += self.size[rx]
            if ly is None:
                self.label[ry] = lx
            for p in self.uses[rx]:
                key, args = self.keys[p]
                sig = (key, tuple(self.find(q) for q in args))
                other = self.sigtable.get(sig)
                if other is None:
                    self.sigtable[sig] = p
                    self.trail.append(("sig", sig))
                elif self.find(other) != self.find(p):
                    pending.append((p, other, _Cong(p, other)))
            self.uses[ry].extend(self.uses[rx])
        return None

    # -------------------------------------------------------------- explanation

    def _path(self, a: int, b: int) -> list[object]:
        if a == b:
            return []
        prev: dict[int, tuple[int, object]] = {a: (a, None)}
        queue = deque([a])
        while queue:
            n = queue.popleft()
            if n == b:
                break
            for m, why in self.edges[n]:
                if m not in prev:
                    prev[m] = (n, why)
                    queue.append(m)
        if b not in prev:
            raise AssertionError("explain called on nodes in different classes")
        out = []
        n = b
        while n != a:
            p, why = prev[n]
            out.append(why)
            n = p
        return out

    def explain(self, a: int, b: int) -> set:
        """Reason tags of the input equalities that entail a = b."""
        out: set = set()
        todo = [(a, b)]
        done: set = set()
        while todo:
            x, y = todo.pop()
            if x == y or (x, y) in done:
                continue
            done.add((x, y))
            for why in self._path(x, y):
                if isinstance(why, _Cong):
                    for u, v in zip(self.keys[why.p][1], self.keys[why.q][1]):
                        todo.append((u, v))
                else:
                    out.add(why)
        return out

    # -------------------------------------------------------------- queries

    def same(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def classes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for n in range(len(self.keys)):
            out.setdefault(self.find(n), []).append(n)
        return out
