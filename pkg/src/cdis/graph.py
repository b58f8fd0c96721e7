"""Directed and mixed graph types plus exact separation queries.

Vertices are dense integer indices ``0..n-1``.  Every graph object here is
treated as an immutable value: derived graphs are always new objects.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Mapping
from enum import Enum

from .errors import InvalidArgument, MalformedGraph

__all__ = [
    "VertexKind",
    "Mark",
    "Dag",
    "DagWithSelection",
    "MixedGraph",
    "ancestors",
    "descendants",
    "d_separated",
    "m_separated",
    "topological_order",
]


class VertexKind(str, Enum):
    OBSERVED = "observed"
    SELECTION = "selection"
    LATENT = "latent"
    ZETA = "zeta"
    NOISE = "noise"
    COUNTERFACTUAL = "counterfactual"


class Mark(str, Enum):
    """Endpoint mark of a mixed-graph edge."""

    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"

    @property
    def symbol(self) -> str:
        return {"tail": "-", "arrow": ">", "circle": "o"}[self.value]


TAIL, ARROW, CIRCLE = Mark.TAIL, Mark.ARROW, Mark.CIRCLE


def _as_set(seed: Iterable[int] | int) -> frozenset[int]:
    if isinstance(seed, int):
        return frozenset((seed,))
    return frozenset(seed)


class Dag:
    """A directed acyclic graph with kind-tagged, named vertices."""

    __slots__ = ("kinds", "names", "parents", "children", "_edges")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]],
                 kinds: Iterable[VertexKind] | None = None,
                 names: Iterable[str] | None = None):
        kinds = tuple(VertexKind(k) for k in kinds) if kinds is not None \
            else (VertexKind.OBSERVED,) * n
        names = tuple(names) if names is not None else tuple(f"V{i}" for i in range(n))
        if len(kinds) != n or len(names) != n:
            raise InvalidArgument("kinds/names length does not match vertex count")
        parents: list[list[int]] = [[] for _ in range(n)]
        children: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise InvalidArgument(f"edge ({a}, {b}) references an unknown vertex")
            if a == b:
                raise MalformedGraph(f"self-loop on vertex {a}")
            if (a, b) in seen:
                raise MalformedGraph(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            parents[b].append(a)
            children[a].append(b)
        self.kinds = kinds
        self.names = names
        self.parents = tuple(tuple(sorted(p)) for p in parents)
        self.children = tuple(tuple(sorted(c)) for c in children)
        self._edges = frozenset(seen)
        topological_order(self)  # raises on cycles

    @property
    def n(self) -> int:
        return len(self.kinds)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self._edges

    def vertices_of_kind(self, *kinds: VertexKind) -> frozenset[int]:
        return frozenset(v for v, k in enumerate(self.kinds) if k in kinds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.kinds == other.kinds and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self.kinds, self._edges))

    def __repr__(self) -> str:
        arrows = ", ".join(f"{self.names[a]}->{self.names[b]}" for a, b in self.sorted_edges())
        return f"{type(self).__name__}({arrows})"


class DagWithSelection(Dag):
    """Ground-truth causal DAG over ``d`` observed and ``t`` selection vertices.

    Observed vertices are ``0..d-1`` and selection vertices ``d..d+t-1``.
    Selection vertices are childless and only have observed parents.
    """

    __slots__ = ("d", "t")

    def __init__(self, d: int, t: int, edges: Iterable[tuple[int, int]],
                 names: Iterable[str] | None = None):
        if d < 0 or t < 0:
            raise InvalidArgument("d and t must be non-negative")
        kinds = (VertexKind.OBSERVED,) * d + (VertexKind.SELECTION,) * t
        if names is None:
            names = [f"X{i + 1}" for i in range(d)] + [f"S{j + 1}" for j in range(t)]
        super().__init__(d + t, edges, kinds, names)
        self.d = d
        self.t = t
        for s in range(d, d + t):
            if self.children[s]:
                raise MalformedGraph(f"selection vertex {s} has children")
            if any(p >= d for p in self.parents[s]):
                raise MalformedGraph(f"selection vertex {s} has a non-observed parent")

    @property
    def observed(self) -> range:
        return range(self.d)

    @property
    def selection(self) -> range:
        return range(self.d, self.d + self.t)

    def ancestrally_selected(self) -> frozenset[int]:
        """Observed vertices with a directed path into some selection vertex."""
        return frozenset(v for v in ancestors(self, self.selection) if v < self.d)

    def observed_subgraph_edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b in self.sorted_edges() if b < self.d]

    def selection_parents(self) -> list[tuple[int, ...]]:
        return [self.parents[s] for s in self.selection]

    def to_json(self) -> dict:
        return {"d": self.d, "t": self.t, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DagWithSelection":
        try:
            d, t = int(obj["d"]), int(obj.get("t", 0))
            edges = [(int(a), int(b)) for a, b in obj["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedGraph(f"bad graph JSON: {exc}") from exc
        return cls(d, t, edges)

    @classmethod
    def from_parents(cls, d: int, observed_edges: Iterable[tuple[int, int]],
                     selection_parents: Iterable[Iterable[int]] = ()) -> "DagWithSelection":
        sel = [tuple(p) for p in selection_parents]
        edges = list(observed_edges)
        for j, ps in enumerate(sel):
            edges.extend((p, d + j) for p in ps)
        return cls(d, len(sel), edges)


def _check_vertices(g, vs: frozenset[int]) -> None:
    for v in vs:
        if not (0 <= v < g.n):
            raise InvalidArgument(f"unknown vertex {v}")


def ancestors(g: Dag, seed: Iterable[int] | int) -> frozenset[int]:
    """Reflexive ancestor closure of ``seed``."""
    seed = _as_set(seed)
    _check_vertices(g, seed)
    seen = set(seed)
    stack = list(seed)
    parents = g.parents
    while stack:
        v = stack.pop()
        for p in parents[v]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return frozenset(seen)


def descendants(g: Dag, seed: Iterable[int] | int) -> frozenset[int]:
    """Reflexive descendant closure of ``seed``."""
    seed = _as_set(seed)
    _check_vertices(g, seed)
    seen = set(seed)
    stack = list(seed)
    children = g.children
    while stack:
        v = stack.pop()
        for c in children[v]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return frozenset(seen)


def topological_order(g: Dag) -> list[int]:
    """Kahn's algorithm, breaking ties by smallest vertex index."""
    indeg = [len(p) for p in g.parents]
    heap = [v for v in range(g.n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in g.children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != g.n:
        raise MalformedGraph("graph contains a directed cycle")
    return order


def d_separated(g: Dag, a: Iterable[int] | int, b: Iterable[int] | int,
                c: Iterable[int] | int = ()) -> bool:
    """Exact d-separation of ``a`` and ``b`` given ``c`` by reachability.

    Traverses (vertex, direction) states: "up" means the vertex was entered
    from one of its children, "down" from one of its parents.
    """
    a, b, c = _as_set(a), _as_set(b), _as_set(c)
    _check_vertices(g, a | b | c)
    if a & b or a & c or b & c:
        raise InvalidArgument("a, b and c must be pairwise disjoint")
    if not a or not b:
        return True
    an_c = ancestors(g, c) if c else frozenset()
    parents, children = g.parents, g.children
    visited: set[tuple[int, bool]] = set()
    stack = [(v, True) for v in a]
    while stack:
        v, up = stack.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v in b:
            return False
        if up:
            if v not in c:
                stack.extend((p, True) for p in parents[v])
                stack.extend((ch, False) for ch in children[v])
        else:
            if v not in c:
                stack.extend((ch, False) for ch in children[v])
            if v in an_c:
                stack.extend((p, True) for p in parents[v])
    return True


_EDGE_SYMBOLS = {
    (TAIL, TAIL): "---", (TAIL, ARROW): "-->", (ARROW, TAIL): "<--",
    (ARROW, ARROW): "<->", (CIRCLE, CIRCLE): "o-o", (CIRCLE, ARROW): "o->",
    (ARROW, CIRCLE): "<-o", (CIRCLE, TAIL): "o--", (TAIL, CIRCLE): "--o",
}


class MixedGraph:
    """Mixed graph whose edges carry an endpoint mark at each end.

    ``endpoint(i, j)`` is the mark at ``j`` on the edge between ``i`` and
    ``j``; so ``i --> j`` has ``endpoint(i, j) == ARROW`` and
    ``endpoint(j, i) == TAIL``.  Used for MAGs (no circles) and PAG snapshots.
    """

    __slots__ = ("names", "kinds", "_marks", "_nbrs")

    def __init__(self, names: Iterable[str],
                 edges: Iterable[tuple[int, int, Mark, Mark]] = (),
                 kinds: Iterable[VertexKind] | None = None):
        self.names = tuple(names)
        n = len(self.names)
        self.kinds = tuple(kinds) if kinds is not None else (VertexKind.OBSERVED,) * n
        marks: dict[tuple[int, int], Mark] = {}
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j, mi, mj in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise InvalidArgument(f"bad edge ({i}, {j})")
            if (i, j) in marks:
                raise MalformedGraph(f"more than one edge between {i} and {j}")
            marks[(j, i)] = Mark(mi)
            marks[(i, j)] = Mark(mj)
            nbrs[i].add(j)
            nbrs[j].add(i)
        self._marks = marks
        self._nbrs = tuple(frozenset(s) for s in nbrs)

    @classmethod
    def from_dag(cls, g: Dag, keep: Iterable[int] | None = None) -> "MixedGraph":
        """Directed mixed graph with the same edges as ``g`` (restricted to ``keep``)."""
        keep = list(range(g.n)) if keep is None else sorted(keep)
        pos = {v: k for k, v in enumerate(keep)}
        edges = [(pos[a], pos[b], TAIL, ARROW) for a, b in g.sorted_edges()
                 if a in pos and b in pos]
        return cls([g.names[v] for v in keep], edges, [g.kinds[v] for v in keep])

    @property
    def n(self) -> int:
        return len(self.names)

    def adjacent(self, i: int, j: int) -> bool:
        return (i, j) in self._marks

    def neighbors(self, i: int) -> frozenset[int]:
        return self._nbrs[i]

    def endpoint(self, i: int, j: int) -> Mark | None:
        """Mark at ``j`` on the ``i``-``j`` edge, or None if not adjacent."""
        return self._marks.get((i, j))

    def edges(self) -> list[tuple[int, int, Mark, Mark]]:
        """Edges as ``(i, j, mark_at_i, mark_at_j)`` with ``i < j``, sorted."""
        return sorted((i, j, self._marks[(j, i)], m)
                      for (i, j), m in self._marks.items() if i < j)

    def adjacencies(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for (i, j) in self._marks if i < j)

    def is_directed(self, i: int, j: int) -> bool:
        """True iff ``i --> j``."""
        return self._marks.get((i, j)) is ARROW and self._marks.get((j, i)) is TAIL

    def is_undirected(self, i: int, j: int) -> bool:
        return self._marks.get((i, j)) is TAIL and self._marks.get((j, i)) is TAIL

    def is_bidirected(self, i: int, j: int) -> bool:
        return self._marks.get((i, j)) is ARROW and self._marks.get((j, i)) is ARROW

    def edge_symbol(self, i: int, j: int) -> str:
        return _EDGE_SYMBOLS[(self._marks[(j, i)], self._marks[(i, j)])]

    def has_circles(self) -> bool:
        return any(m is CIRCLE for m in self._marks.values())

    def parents(self, v: int) -> frozenset[int]:
        return frozenset(u for u in self._nbrs[v] if self.is_directed(u, v))

    def ancestors(self, seed: Iterable[int] | int) -> frozenset[int]:
        """Reflexive closure along directed (``-->``) edges only."""
        seed = _as_set(seed)
        seen = set(seed)
        stack = list(seed)
        while stack:
            v = stack.pop()
            for u in self._nbrs[v]:
                if u not in seen and self.is_directed(u, v):
                    seen.add(u)
                    stack.append(u)
        return frozenset(seen)

    def v_structures(self) -> frozenset[tuple[int, int, int]]:
        """Triples ``(i, k, j)`` with ``i < j`` nonadjacent and arrowheads at ``k`` from both."""
        out = set()
        for k in range(self.n):
            into = sorted(u for u in self._nbrs[k] if self._marks[(u, k)] is ARROW)
            for x in range(len(into)):
                for y in range(x + 1, len(into)):
                    i, j = into[x], into[y]
                    if (i, j) not in self._marks:
                        out.add((i, k, j))
        return frozenset(out)

    def check_mag(self) -> None:
        """Raise MalformedGraph unless this is an ancestral graph without circles."""
        if self.has_circles():
            raise MalformedGraph("MAG may not contain circle marks")
        for v in range(self.n):
            for u in self._nbrs[v]:
                if self.is_undirected(u, v):
                    if any(self._marks[(w, v)] is ARROW for w in self._nbrs[v]):
                        raise MalformedGraph(f"vertex {v} has an undirected edge and an arrowhead")
        for i in range(self.n):
            an_i = self.ancestors(i)
            for j in self._nbrs[i]:
                # an arrowhead at j requires j not to be an ancestor of i
                if j in an_i and self._marks[(i, j)] is ARROW:
                    raise MalformedGraph(f"(almost) directed cycle through {i} and {j}")

    def relabel(self, names: Iterable[str]) -> "MixedGraph":
        return MixedGraph(names, self.edges(), self.kinds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.n == other.n and self._marks == other._marks

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._marks.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{self.names[i]}{self.edge_symbol(i, j)}{self.names[j]}"
                         for i, j, _, _ in self.edges())
        return f"MixedGraph({body})"


def m_separated(m: MixedGraph, i: int, j: int, c: Iterable[int] = ()) -> bool:
    """Exact m-separation of ``i`` and ``j`` given ``c`` in a MAG.

    Direct traversal over (vertex, entered-through-arrowhead) states.  A
    vertex is a collider when both incident marks on the walk are arrowheads;
    colliders pass iff they are ancestors (along ``-->``) of ``c``.
    """
    c = _as_set(c)
    if i == j or i in c or j in c:
        raise InvalidArgument("need i != j and i, j outside the conditioning set")
    for v in (i, j, *c):
        if not (0 <= v < m.n):
            raise InvalidArgument(f"unknown vertex {v}")
    if m.has_circles():
        raise InvalidArgument("m-separation is defined on MAGs only (circle marks present)")
    an_c = m.ancestors(c) if c else frozenset()
    marks = m._marks
    visited: set[tuple[int, bool]] = set()
    stack = [(w, marks[(i, w)] is ARROW) for w in m.neighbors(i)]
    while stack:
        v, into = stack.pop()
        if (v, into) in visited:
            continue
        visited.add((v, into))
        if v == j:
            return False
        for w in m.neighbors(v):
            collider = into and marks[(w, v)] is ARROW
            if collider:
                if v not in an_c:
                    continue
            elif v in c:
                continue
            stack.append((w, marks[(v, w)] is ARROW))
    return True
