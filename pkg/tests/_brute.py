"""Slow, definition-level reference implementations used as test oracles.

Everything here enumerates simple paths or whole graph families directly,
sharing no code with the package's traversal-based implementations.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator

# Graphs are given as (n, edges) for DAGs, and for mixed graphs as a dict
# {(i, j): (mark_at_i, mark_at_j)} with i < j and marks in {"t", "a"}.


def children_map(n: int, edges: Iterable[tuple[int, int]]) -> list[set[int]]:
    ch = [set() for _ in range(n)]
    for a, b in edges:
        ch[a].add(b)
    return ch


def descendants(n: int, edges, v: int) -> set[int]:
    ch = children_map(n, edges)
    out, stack = {v}, [v]
    while stack:
        for w in ch[stack.pop()]:
            if w not in out:
                out.add(w)
                stack.append(w)
    return out


def ancestors(n: int, edges, vs: Iterable[int]) -> set[int]:
    return {u for u in range(n) for v in vs if v in descendants(n, edges, u)}


def simple_paths(adj: list[set[int]], a: int, b: int) -> Iterator[list[int]]:
    stack = [(a, [a])]
    while stack:
        v, path = stack.pop()
        if v == b:
            yield path
            continue
        for w in adj[v]:
            if w not in path:
                stack.append((w, path + [w]))


def _skeleton(n: int, edges) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def d_separated(n: int, edges, x: int, y: int, cond: Iterable[int]) -> bool:
    """No simple path between x and y is open given ``cond``."""
    cond = set(cond)
    es = set(edges)
    an_c = ancestors(n, es, cond)
    for path in simple_paths(_skeleton(n, es), x, y):
        open_ = True
        for prev, v, nxt in zip(path, path[1:], path[2:]):
            collider = (prev, v) in es and (nxt, v) in es
            if collider and v not in an_c or not collider and v in cond:
                open_ = False
                break
        if open_:
            return False
    return True


def inducing_path(n: int, edges, i: int, j: int, latent: set[int], selected: set[int]) -> bool:
    """A path whose non-colliders are latent and whose colliders are in An({i, j} ∪ S)."""
    es = set(edges)
    an = ancestors(n, es, {i, j} | selected)
    for path in simple_paths(_skeleton(n, es), i, j):
        ok = True
        for prev, v, nxt in zip(path, path[1:], path[2:]):
            collider = (prev, v) in es and (nxt, v) in es
            if collider and v not in an or not collider and v not in latent:
                ok = False
                break
        if ok:
            return True
    return False


def mag(n: int, edges, observed: list[int], latent: set[int], selected: set[int]) -> dict:
    """MAG over ``observed`` (re-indexed by position) from inducing paths and ancestry."""
    es = set(edges)
    out = {}
    for a, b in itertools.combinations(range(len(observed)), 2):
        i, j = observed[a], observed[b]
        if inducing_path(n, es, i, j, latent, selected):
            mark_j = "t" if j in ancestors(n, es, {i} | selected) else "a"
            mark_i = "t" if i in ancestors(n, es, {j} | selected) else "a"
            out[(a, b)] = (mark_i, mark_j)
    return out


def _mark(m: dict, i: int, j: int) -> str | None:
    """Mark at ``j`` on the edge between ``i`` and ``j``."""
    if i < j:
        e = m.get((i, j))
        return None if e is None else e[1]
    e = m.get((j, i))
    return None if e is None else e[0]


def mixed_ancestors(n: int, m: dict, vs: Iterable[int]) -> set[int]:
    directed = [(i, j) for i in range(n) for j in range(n)
                if i != j and _mark(m, j, i) == "t" and _mark(m, i, j) == "a"]
    return ancestors(n, directed, vs)


def is_ancestral(n: int, m: dict) -> bool:
    for i in range(n):
        for j in range(n):
            if i == j or _mark(m, i, j) is None:
                continue
            # arrowhead at j means j is not an ancestor of i
            if _mark(m, i, j) == "a" and j in mixed_ancestors(n, m, {i}):
                return False
            # an undirected edge at i forbids arrowheads into i
            if _mark(m, i, j) == "t" and _mark(m, j, i) == "t":
                if any(_mark(m, k, i) == "a" for k in range(n) if k != i):
                    return False
    return True


def m_separated(n: int, m: dict, x: int, y: int, cond: Iterable[int]) -> bool:
    cond = set(cond)
    adj = [set() for _ in range(n)]
    for a, b in m:
        adj[a].add(b)
        adj[b].add(a)
    an_c = mixed_ancestors(n, m, cond)
    for path in simple_paths(adj, x, y):
        open_ = True
        for prev, v, nxt in zip(path, path[1:], path[2:]):
            collider = _mark(m, prev, v) == "a" and _mark(m, nxt, v) == "a"
            if collider and v not in an_c or not collider and v in cond:
                open_ = False
                break
        if open_:
            return False
    return True


def separation_model(n: int, separated) -> frozenset:
    """All (i, j, C) with ``separated(i, j, C)``, i < j, C over the other vertices."""
    out = set()
    for i, j in itertools.combinations(range(n), 2):
        rest = [v for v in range(n) if v not in (i, j)]
        for r in range(len(rest) + 1):
            for c in itertools.combinations(rest, r):
                if separated(i, j, c):
                    out.add((i, j, c))
    return frozenset(out)


_EDGE_TYPES = (("t", "a"), ("a", "t"), ("a", "a"), ("t", "t"))


def ancestral_graphs(n: int, skeleton: Iterable[tuple[int, int]], *, bidirected: bool = True,
                     fixed: dict | None = None) -> Iterator[dict]:
    """Every ancestral graph on a fixed skeleton, optionally without ``<->``.

    ``fixed`` maps an edge (i, j), i < j, to the allowed (mark_i, mark_j) types.
    """
    skeleton = sorted(tuple(sorted(e)) for e in skeleton)
    types = [t for t in _EDGE_TYPES if bidirected or t != ("a", "a")]
    choices = [(fixed or {}).get(e, types) for e in skeleton]
    for combo in itertools.product(*choices):
        m = dict(zip(skeleton, combo))
        if is_ancestral(n, m):
            yield m


def consistent_mags(n: int, skeleton, model: frozenset, **kw) -> list[dict]:
    """Ancestral graphs on ``skeleton`` whose m-separations are exactly ``model``."""
    out = []
    for m in ancestral_graphs(n, skeleton, **kw):
        if separation_model(n, lambda i, j, c: m_separated(n, m, i, j, c)) == model:
            out.append(m)
    return out


def invariant_marks(mags: list[dict]) -> dict:
    """Per edge, the marks shared by every graph (``"o"`` where they differ)."""
    out = {}
    for e in mags[0]:
        ends = [m[e] for m in mags]
        out[e] = tuple(ends[0][s] if all(x[s] == ends[0][s] for x in ends) else "o" for s in (0, 1))
    return out
