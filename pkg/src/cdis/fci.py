"""Skeleton search and orientation rules for partial ancestral graphs.

:func:`fas` runs a level-wise (order-independent) skeleton search, marks
unshielded colliders and refines the skeleton with possible-d-sep sets.
:func:`zhang_rules` applies the ten FCI orientation rules to a fixpoint and
:func:`fci_plus` additionally promotes every ``o->`` edge to ``-->``.
"""

from __future__ import annotations

import itertools
import json
import logging
from collections import deque
from collections.abc import Iterable

from .ci import TestScope
from .errors import InvalidArgument, OrientationConflict
from .graph import ARROW, CIRCLE, TAIL, Mark, MixedGraph, VertexKind

__all__ = [
    "Pag",
    "fas",
    "orient_unshielded",
    "possible_d_sep",
    "zhang_rules",
    "fci_plus",
    "directed",
    "undirected",
    "RULES",
]

log = logging.getLogger(__name__)

Knowledge = tuple[int, int, Mark]


def directed(i: int, j: int) -> list[Knowledge]:
    """Knowledge entries fixing ``i --> j``."""
    return [(j, i, TAIL), (i, j, ARROW)]


def undirected(i: int, j: int) -> list[Knowledge]:
    return [(j, i, TAIL), (i, j, TAIL)]


class Pag:
    """Mutable partial ancestral graph with separating sets and an audit trace.

    ``endpoint(i, j)`` is the mark at ``j`` on the ``i``-``j`` edge.  Marks
    only move from circle to tail or arrow; any other change is a conflict,
    raised in strict mode and skipped (with a warning) otherwise.
    """

    def __init__(self, names: Iterable[str], kinds: Iterable[VertexKind] | None = None,
                 *, strict: bool = True):
        self.names = tuple(names)
        self.kinds = tuple(kinds) if kinds is not None else (VertexKind.OBSERVED,) * len(self.names)
        self.strict = strict
        self._m: dict[tuple[int, int], Mark] = {}
        self._nbrs: list[set[int]] = [set() for _ in self.names]
        self.sepsets: dict[frozenset[int], frozenset[int]] = {}
        self.fixed: set[tuple[int, int]] = set()
        self.trace: list[dict] = []
        self._origin: dict[tuple[int, int], str] = {}

    # -- construction -------------------------------------------------------

    @classmethod
    def complete(cls, names, kinds=None, *, strict: bool = True) -> "Pag":
        p = cls(names, kinds, strict=strict)
        for i, j in itertools.combinations(range(p.n), 2):
            p.add_edge(i, j)
        return p

    @classmethod
    def from_mixed(cls, m: MixedGraph, *, strict: bool = True) -> "Pag":
        p = cls(m.names, m.kinds, strict=strict)
        for i, j, mi, mj in m.edges():
            p.add_edge(i, j, mi, mj)
        return p

    def copy(self) -> "Pag":
        p = Pag(self.names, self.kinds, strict=self.strict)
        p._m = dict(self._m)
        p._nbrs = [set(s) for s in self._nbrs]
        p.sepsets = dict(self.sepsets)
        p.fixed = set(self.fixed)
        p.trace = list(self.trace)
        p._origin = dict(self._origin)
        return p

    def add_edge(self, i: int, j: int, mark_i: Mark = CIRCLE, mark_j: Mark = CIRCLE) -> None:
        if i == j or (i, j) in self._m:
            raise InvalidArgument(f"cannot add edge ({i}, {j})")
        self._m[(j, i)] = mark_i
        self._m[(i, j)] = mark_j
        self._nbrs[i].add(j)
        self._nbrs[j].add(i)

    def remove_edge(self, i: int, j: int, sepset: Iterable[int] | None = None) -> None:
        del self._m[(i, j)], self._m[(j, i)]
        self._nbrs[i].discard(j)
        self._nbrs[j].discard(i)
        if sepset is not None:
            self.sepsets[frozenset((i, j))] = frozenset(sepset)

    # -- queries ------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.names)

    def adjacent(self, i: int, j: int) -> bool:
        return (i, j) in self._m

    def neighbors(self, i: int) -> list[int]:
        return sorted(self._nbrs[i])

    def endpoint(self, i: int, j: int) -> Mark | None:
        return self._m.get((i, j))

    def is_directed(self, i: int, j: int) -> bool:
        return self._m.get((i, j)) is ARROW and self._m.get((j, i)) is TAIL

    def is_undirected(self, i: int, j: int) -> bool:
        return self._m.get((i, j)) is TAIL and self._m.get((j, i)) is TAIL

    def sepset(self, i: int, j: int) -> frozenset[int] | None:
        return self.sepsets.get(frozenset((i, j)))

    def edges(self) -> list[tuple[int, int, Mark, Mark]]:
        return sorted((i, j, self._m[(j, i)], m) for (i, j), m in self._m.items() if i < j)

    def adjacencies(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for (i, j) in self._m if i < j)

    def directed_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for (i, j) in self._m if self.is_directed(i, j))

    def snapshot(self) -> MixedGraph:
        return MixedGraph(self.names, self.edges(), self.kinds)

    def edge_symbol(self, i: int, j: int) -> str:
        return self.snapshot().edge_symbol(i, j)

    def __repr__(self) -> str:
        return "Pag" + repr(self.snapshot())[len("MixedGraph"):]

    # -- mutation -----------------------------------------------------------

    def orient(self, i: int, j: int, mark: Mark, rule: str, premise: tuple[int, ...] = (),
               *, force: bool = False) -> bool:
        """Set the mark at ``j`` on edge ``i``-``j``; returns whether anything changed."""
        cur = self._m.get((i, j))
        if cur is None:
            raise InvalidArgument(f"{rule}: {self.names[i]} and {self.names[j]} are not adjacent")
        if cur is mark:
            return False
        if cur is not CIRCLE or (i, j) in self.fixed:
            prior = self._origin.get((i, j), "fas")
            msg = (f"{rule} wants mark {mark.value} at {self.names[j]} on edge "
                   f"{self.names[i]}-{self.names[j]}, but {prior} set {cur.value}")
            if not force:
                if self.strict:
                    raise OrientationConflict(msg, edge=(i, j), rules=(prior, rule))
                log.warning("orientation conflict skipped: %s", msg)
                self.trace.append({"rule": rule, "edge": [i, j], "conflict": True,
                                   "kept": cur.value, "wanted": mark.value, "premise": list(premise)})
                return False
            log.warning("orientation conflict overridden: %s", msg)
            self.fixed.discard((i, j))
        self._m[(i, j)] = mark
        self._origin[(i, j)] = rule
        self.trace.append({"rule": rule, "edge": [i, j], "before": cur.value, "after": mark.value,
                           "premise": list(premise)})
        return True

    def apply_knowledge(self, knowledge: Iterable[Knowledge], rule: str = "knowledge") -> bool:
        changed = False
        for i, j, mark in knowledge:
            mark = Mark(mark)
            changed |= self.orient(i, j, mark, rule)
            if self._m[(i, j)] is mark:
                self.fixed.add((i, j))
        return changed

    def reset_marks(self) -> None:
        for key in self._m:
            if key not in self.fixed:
                self._m[key] = CIRCLE
                self._origin.pop(key, None)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": list(self.names),
            "edges": [{"i": i, "j": j, "mark_i": a.value, "mark_j": b.value}
                      for i, j, a, b in self.edges()],
            "sepsets": [{"i": min(p), "j": max(p), "set": sorted(s)}
                        for p, s in sorted(self.sepsets.items(), key=lambda kv: sorted(kv[0]))],
        }

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.trace)


# ---------------------------------------------------------------------------
# skeleton


def orient_unshielded(p: Pag) -> None:
    """Mark every unshielded triple whose middle is outside the sepset as a collider."""
    for z in range(p.n):
        nb = p.neighbors(z)
        for x, y in itertools.combinations(nb, 2):
            if p.adjacent(x, y):
                continue
            sep = p.sepset(x, y)
            if sep is None or z in sep:
                continue
            for a in (x, y):
                if p.endpoint(a, z) is CIRCLE and (a, z) not in p.fixed:
                    p.orient(a, z, ARROW, "R0", (x, z, y))


def possible_d_sep(p: Pag, x: int) -> frozenset[int]:
    """Vertices reachable from ``x`` along paths whose inner triples are colliders or triangles."""
    out = set()
    seen = set()
    queue = deque((x, b) for b in p.neighbors(x))
    while queue:
        a, b = queue.popleft()
        if (a, b) in seen:
            continue
        seen.add((a, b))
        out.add(b)
        for c in p.neighbors(b):
            if c == a or c == x or (b, c) in seen:
                continue
            if (p.endpoint(a, b) is ARROW and p.endpoint(c, b) is ARROW) or p.adjacent(a, c):
                queue.append((b, c))
    out.discard(x)
    return frozenset(out)


def fas(scope: TestScope, *, sure: Iterable[tuple[int, int]] = (), max_cond: int | None = -1,
        refine: bool = True, strict: bool = True, kinds: Iterable[VertexKind] | None = None) -> Pag:
    """Skeleton search over all vertices of ``scope``.

    ``sure`` adjacencies are never tested.  ``max_cond`` caps the size of
    possible-d-sep conditioning sets (``-1``: unlimited up to 10 vertices,
    4 beyond; ``None``: unlimited).  Returns a PAG with circle marks except
    for unshielded colliders.
    """
    n = scope.n
    if max_cond == -1:
        max_cond = None if n <= 10 else 4
    sure = {frozenset(e) for e in sure}
    p = Pag.complete(scope.names, kinds, strict=strict)

    level = 0
    while True:
        snapshot = [p.neighbors(v) for v in range(n)]
        tested = False
        for x in range(n):
            for y in snapshot[x]:
                if not p.adjacent(x, y) or frozenset((x, y)) in sure:
                    continue
                cands = [v for v in snapshot[x] if v != y]
                if len(cands) < level:
                    continue
                tested = True
                for cond in itertools.combinations(cands, level):
                    indep, sep = scope.independent(x, y, frozenset(cond))
                    if indep:
                        p.remove_edge(x, y, sep)
                        break
        if not tested:
            break
        level += 1

    orient_unshielded(p)
    if not refine:
        return p

    pds = [possible_d_sep(p, v) for v in range(n)]
    removed = False
    for x in range(n):
        for y in p.neighbors(x):
            if frozenset((x, y)) in sure:
                continue
            cands = sorted(pds[x] - {x, y})
            top = len(cands) if max_cond is None else min(max_cond, len(cands))
            if max_cond is not None and len(cands) > max_cond:
                log.info("possible-d-sep search for %s-%s capped at size %d", scope.names[x],
                         scope.names[y], max_cond)
            found = False
            for size in range(1, top + 1):
                for cond in itertools.combinations(cands, size):
                    indep, sep = scope.independent(x, y, frozenset(cond))
                    if indep:
                        p.remove_edge(x, y, sep)
                        removed = found = True
                        break
                if found:
                    break
    if removed:
        p.reset_marks()
        p.trace.append({"rule": "reset", "edge": None, "premise": []})
        orient_unshielded(p)
    return p


# ---------------------------------------------------------------------------
# orientation rules; each sweeps the graph once and reports whether it changed


def _r1(p: Pag) -> bool:
    changed = False
    for b in range(p.n):
        for a in p.neighbors(b):
            if p.endpoint(a, b) is not ARROW:
                continue
            for c in p.neighbors(b):
                if c == a or p.adjacent(a, c) or p.endpoint(c, b) is not CIRCLE:
                    continue
                changed |= p.orient(c, b, TAIL, "R1", (a, b, c))
                changed |= p.orient(b, c, ARROW, "R1", (a, b, c))
    return changed


def _r2(p: Pag) -> bool:
    changed = False
    for a in range(p.n):
        for c in p.neighbors(a):
            if p.endpoint(a, c) is not CIRCLE:
                continue
            for b in p.neighbors(a):
                if b == c or not p.adjacent(b, c):
                    continue
                if (p.is_directed(a, b) and p.endpoint(b, c) is ARROW) or \
                        (p.endpoint(a, b) is ARROW and p.is_directed(b, c)):
                    changed |= p.orient(a, c, ARROW, "R2", (a, b, c))
                    break
    return changed


def _r3(p: Pag) -> bool:
    changed = False
    for b in range(p.n):
        into = [v for v in p.neighbors(b) if p.endpoint(v, b) is ARROW]
        for a, c in itertools.combinations(into, 2):
            if p.adjacent(a, c):
                continue
            for t in p.neighbors(b):
                if t in (a, c) or p.endpoint(t, b) is not CIRCLE:
                    continue
                if p.endpoint(a, t) is CIRCLE and p.endpoint(c, t) is CIRCLE:
                    changed |= p.orient(t, b, ARROW, "R3", (a, t, c, b))
    return changed


def _discriminating(p: Pag, b: int, c: int) -> tuple[int, int] | None:
    """Find (theta, a) ending a discriminating path <theta, .., a, b, c> for ``b``."""
    starts = [a for a in p.neighbors(b)
              if a != c and p.endpoint(b, a) is ARROW and p.is_directed(a, c)]
    for a0 in starts:
        prev = {a0: None}
        queue = deque([a0])
        while queue:
            v = queue.popleft()
            for w in p.neighbors(v):
                if w in prev or w in (b, c) or p.endpoint(w, v) is not ARROW:
                    continue
                if not p.adjacent(w, c):
                    return w, a0
                if p.is_directed(w, c) and p.endpoint(v, w) is ARROW:
                    prev[w] = v
                    queue.append(w)
    return None


def _r4(p: Pag) -> bool:
    changed = False
    for c in range(p.n):
        for b in p.neighbors(c):
            if p.endpoint(c, b) is not CIRCLE:
                continue
            hit = _discriminating(p, b, c)
            if hit is None:
                continue
            theta, a = hit
            sep = p.sepset(theta, c)
            if sep is None:
                continue
            if b in sep:
                changed |= p.orient(c, b, TAIL, "R4", (theta, a, b, c))
                changed |= p.orient(b, c, ARROW, "R4", (theta, a, b, c))
            else:
                changed |= p.orient(a, b, ARROW, "R4", (theta, a, b, c))
                changed |= p.orient(c, b, ARROW, "R4", (theta, a, b, c))
                changed |= p.orient(b, c, ARROW, "R4", (theta, a, b, c))
    return changed


def _circle_edge(p: Pag, u: int, v: int) -> bool:
    return p.endpoint(u, v) is CIRCLE and p.endpoint(v, u) is CIRCLE


def _uncovered_circle_path(p: Pag, a: int, b: int) -> list[int] | None:
    for g in p.neighbors(a):
        if g == b or p.adjacent(g, b) or not _circle_edge(p, a, g):
            continue
        stack = [[a, g]]
        while stack:
            path = stack.pop()
            last = path[-1]
            for w in p.neighbors(last):
                if w in path or not _circle_edge(p, last, w) or p.adjacent(path[-2], w):
                    continue
                if w == b:
                    if not p.adjacent(last, a):
                        return path + [b]
                    continue
                stack.append(path + [w])
    return None


def _r5(p: Pag) -> bool:
    changed = False
    for a in range(p.n):
        for b in p.neighbors(a):
            if b < a or not _circle_edge(p, a, b):
                continue
            path = _uncovered_circle_path(p, a, b)
            if path is None:
                continue
            for u, v in [(a, b)] + list(zip(path, path[1:])):
                changed |= p.orient(u, v, TAIL, "R5", tuple(path))
                changed |= p.orient(v, u, TAIL, "R5", tuple(path))
    return changed


def _r6(p: Pag) -> bool:
    changed = False
    for b in range(p.n):
        und = [a for a in p.neighbors(b) if p.is_undirected(a, b)]
        if not und:
            continue
        for c in p.neighbors(b):
            if p.endpoint(c, b) is not CIRCLE:
                continue
            a = next((a for a in und if a != c), None)
            if a is not None:
                changed |= p.orient(c, b, TAIL, "R6", (a, b, c))
    return changed


def _r7(p: Pag) -> bool:
    changed = False
    for b in range(p.n):
        for a in p.neighbors(b):
            if not (p.endpoint(b, a) is TAIL and p.endpoint(a, b) is CIRCLE):
                continue
            for c in p.neighbors(b):
                if c == a or p.adjacent(a, c) or p.endpoint(c, b) is not CIRCLE:
                    continue
                changed |= p.orient(c, b, TAIL, "R7", (a, b, c))
    return changed


def _circle_arrow(p: Pag, a: int, c: int) -> bool:
    """``a o-> c``."""
    return p.endpoint(c, a) is CIRCLE and p.endpoint(a, c) is ARROW


def _r8(p: Pag) -> bool:
    changed = False
    for a in range(p.n):
        for c in p.neighbors(a):
            if not _circle_arrow(p, a, c):
                continue
            for b in p.neighbors(a):
                if b == c or not p.is_directed(b, c):
                    continue
                if p.is_directed(a, b) or (p.endpoint(b, a) is TAIL and p.endpoint(a, b) is CIRCLE):
                    changed |= p.orient(c, a, TAIL, "R8", (a, b, c))
                    break
    return changed


def _pd(p: Pag, u: int, v: int) -> bool:
    """Edge ``u``-``v`` is potentially directed from ``u`` to ``v``."""
    return p.endpoint(v, u) is not ARROW and p.endpoint(u, v) is not TAIL


def _uncovered_pd_path(p: Pag, start: list[int], target: int) -> bool:
    """Is there an uncovered potentially directed path extending ``start`` to ``target``?"""
    if start[-1] == target:
        return True
    stack = [start]
    seen_states = set()
    while stack:
        path = stack.pop()
        last, before = path[-1], path[-2]
        for w in p.neighbors(last):
            if w in path or not _pd(p, last, w) or p.adjacent(before, w):
                continue
            if w == target:
                return True
            state = (last, w, frozenset(path))
            if state in seen_states:
                continue
            seen_states.add(state)
            stack.append(path + [w])
    return False


def _r9(p: Pag) -> bool:
    changed = False
    for a in range(p.n):
        for c in p.neighbors(a):
            if not _circle_arrow(p, a, c):
                continue
            for b in p.neighbors(a):
                if b == c or p.adjacent(b, c) or not _pd(p, a, b):
                    continue
                if _uncovered_pd_path(p, [a, b], c):
                    changed |= p.orient(c, a, TAIL, "R9", (a, b, c))
                    break
    return changed


def _r10(p: Pag) -> bool:
    changed = False
    for a in range(p.n):
        for c in p.neighbors(a):
            if not _circle_arrow(p, a, c):
                continue
            parents = [b for b in p.neighbors(c) if b != a and p.is_directed(b, c)]
            if len(parents) < 2:
                continue
            firsts = {}
            for b in parents:
                firsts[b] = [m for m in p.neighbors(a)
                             if m != c and _pd(p, a, m) and _uncovered_pd_path(p, [a, m], b)]
            fired = False
            for b, t in itertools.combinations(parents, 2):
                for mu in firsts[b]:
                    for om in firsts[t]:
                        if mu != om and not p.adjacent(mu, om):
                            changed |= p.orient(c, a, TAIL, "R10", (a, b, t, c, mu, om))
                            fired = True
                            break
                    if fired:
                        break
                if fired:
                    break
    return changed


RULES = (("R1", _r1), ("R2", _r2), ("R3", _r3), ("R4", _r4), ("R5", _r5),
         ("R6", _r6), ("R7", _r7), ("R8", _r8), ("R9", _r9), ("R10", _r10))


def _run_rules(p: Pag) -> None:
    # restart from R1 whenever any rule changes something, so later rules
    # only see graphs closed under the earlier ones
    while True:
        for _, rule in RULES:
            if rule(p):
                break
        else:
            return


def zhang_rules(p: Pag, knowledge: Iterable[Knowledge] = ()) -> Pag:
    """Copy of ``p`` with ``knowledge`` fixed and R1-R10 applied to a fixpoint."""
    q = p.copy()
    q.apply_knowledge(knowledge)
    _run_rules(q)
    return q


def fci_plus(p: Pag, knowledge: Iterable[Knowledge] = ()) -> Pag:
    """R1-R10 to a fixpoint, then every ``o->`` becomes ``-->``; repeat until stable."""
    q = zhang_rules(p, knowledge)
    while True:
        promote = [(i, j) for i, j, a, b in q.edges() if a is CIRCLE and b is ARROW] + \
                  [(j, i) for i, j, a, b in q.edges() if b is CIRCLE and a is ARROW]
        if not promote:
            return q
        for i, j in sorted(promote):
            q.orient(j, i, TAIL, "promote")
        _run_rules(q)
