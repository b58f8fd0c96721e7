"""Maximal ancestral graphs of DAGs with latent and selection vertices.

Two constructions are provided and kept in agreement by the test-suite:

* :func:`mag_general` works for any DAG and any (observed, latent, selected)
  partition, using an inducing-path reachability search plus the ancestral
  orientation rule.
* :func:`mag_of_twin` builds the MAG of an interventional twin graph directly
  from closed-form adjacency and orientation rules stated on the base DAG.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass

from .errors import InvalidArgument
from .graph import ARROW, TAIL, Dag, DagWithSelection, MixedGraph, VertexKind, ancestors, descendants
from .twin import build_twin, normalize_target

__all__ = [
    "VertexPartition",
    "mag_general",
    "mag_observational",
    "mag_of_twin",
    "twin_mag_general",
    "has_inducing_path",
    "ancestral_marks",
]


@dataclass(frozen=True)
class VertexPartition:
    observed: frozenset[int]
    latent: frozenset[int]
    selected: frozenset[int]

    def __post_init__(self):
        for name in ("observed", "latent", "selected"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.observed & self.latent or self.observed & self.selected or self.latent & self.selected:
            raise InvalidArgument("partition blocks must be pairwise disjoint")

    def check(self, n: int) -> None:
        if self.observed | self.latent | self.selected != frozenset(range(n)):
            raise InvalidArgument("partition does not cover the graph's vertices")

    @classmethod
    def from_kinds(cls, g: Dag) -> "VertexPartition":
        """Selection-kind vertices are selected; noise and counterfactual vertices latent."""
        sel = g.vertices_of_kind(VertexKind.SELECTION)
        lat = g.vertices_of_kind(VertexKind.LATENT, VertexKind.NOISE, VertexKind.COUNTERFACTUAL)
        return cls(frozenset(range(g.n)) - sel - lat, lat, sel)


def has_inducing_path(g: Dag, i: int, j: int, latent: frozenset[int],
                      ancestor_set: frozenset[int]) -> bool:
    """Search for an inducing path between ``i`` and ``j``.

    A path is inducing when every non-endpoint outside ``latent`` is a
    collider and every collider lies in ``ancestor_set`` (the ancestors of
    ``{i, j}`` and the selected vertices).  The search runs over states
    ``(vertex, entered through an arrowhead)``, so it is linear in the edges.
    """
    parents = g.parents
    children = g.children
    start = [(w, True) for w in children[i]] + [(w, False) for w in parents[i]]
    seen = set(start)
    queue = deque(start)
    while queue:
        v, into = queue.popleft()
        if v == j:
            return True
        if v == i:
            continue
        in_anc = v in ancestor_set
        is_latent = v in latent
        # leaving v towards a parent puts an arrowhead at v on that edge
        if (into and in_anc) or (not into and is_latent):
            for w in parents[v]:
                if (w, False) not in seen:
                    seen.add((w, False))
                    queue.append((w, False))
        # leaving towards a child: never a collider at v
        if is_latent:
            for w in children[v]:
                if (w, True) not in seen:
                    seen.add((w, True))
                    queue.append((w, True))
    return False


def ancestral_marks(i_in_an_j: bool, j_in_an_i: bool) -> tuple:
    """Marks ``(at_i, at_j)`` from ancestral relations relative to the selected set."""
    return (TAIL if i_in_an_j else ARROW, TAIL if j_in_an_i else ARROW)


def mag_general(g: Dag, part: VertexPartition) -> MixedGraph:
    """MAG of ``g`` over ``part.observed`` (ascending index order)."""
    part.check(g.n)
    obs = sorted(part.observed)
    sel = part.selected
    an = [ancestors(g, {v} | sel) for v in range(g.n)]
    edges = []
    for x in range(len(obs)):
        i = obs[x]
        for y in range(x + 1, len(obs)):
            j = obs[y]
            anc = an[i] | an[j]
            if not has_inducing_path(g, i, j, part.latent, anc):
                continue
            edges.append((x, y, *ancestral_marks(i in an[j], j in an[i])))
    return MixedGraph([g.names[v] for v in obs], edges, [g.kinds[v] for v in obs])


def twin_mag_general(g: DagWithSelection, target: Iterable[int]) -> MixedGraph:
    """The twin graph's MAG computed through the general construction."""
    tw = build_twin(g, target)
    return mag_general(tw.graph, VertexPartition(*tw.partition()))


def _observed_adjacency(g: DagWithSelection, an_s: frozenset[int]) -> list[set[int]]:
    d = g.d
    adj = [set() for _ in range(d)]
    for a, b in g.edges:
        if b < d:
            adj[a].add(b)
            adj[b].add(a)
    for c in an_s | frozenset(g.selection):
        ps = [p for p in g.parents[c] if p < d]
        for x in range(len(ps)):
            for y in range(x + 1, len(ps)):
                adj[ps[x]].add(ps[y])
                adj[ps[y]].add(ps[x])
    return adj


def _closures(g: DagWithSelection):
    d = g.d
    sel = frozenset(g.selection)
    an_s = frozenset(v for v in ancestors(g, sel) if v < d)
    an_with_s = [ancestors(g, {v} | sel) for v in range(d)]
    return an_s, an_with_s


def _names(g: DagWithSelection) -> list[str]:
    return [g.names[i] for i in range(g.d)]


def mag_observational(g: DagWithSelection) -> MixedGraph:
    """MAG of the observational distribution over ``X_0..X_{d-1}``.

    Two vertices are adjacent iff they are adjacent in ``g`` or share a child
    that is ancestrally selected (selection vertices included).
    """
    an_s, an_with_s = _closures(g)
    adj = _observed_adjacency(g, an_s)
    edges = [(i, j, *ancestral_marks(i in an_with_s[j], j in an_with_s[i]))
             for i in range(g.d) for j in sorted(adj[i]) if i < j]
    return MixedGraph(_names(g), edges)


def mag_of_twin(g: DagWithSelection, target: Iterable[int]) -> MixedGraph:
    """MAG of the twin graph over ``X_0..X_{d-1}`` and ``zeta`` (index ``d``).

    Adjacency: pairs adjacent observationally, plus pairs joined by a path of
    observational adjacencies whose inner vertices are all affected and whose
    vertices are all ancestrally selected.  ``zeta`` is adjacent to targeted
    vertices and to affected, ancestrally selected ones.

    Orientation: ``zeta`` points out; observational ``-->`` edges are kept;
    otherwise two unaffected endpoints give ``---``, an affected endpoint
    receives the arrowhead unless both are affected, in which case the
    ancestor gets the tail, and ``<->`` remains when neither is an ancestor.
    """
    target = normalize_target(g, target)
    d = g.d
    an_s, an_with_s = _closures(g)
    adj0 = _observed_adjacency(g, an_s)
    aff = frozenset(v for v in descendants(g, target) if v < d)
    inner = aff & an_s
    an_plain = [ancestors(g, v) for v in range(d)]

    adj = [set(a) for a in adj0]
    for i in sorted(an_s):
        # reach j through inner vertices only
        seen = {i}
        queue = deque([i])
        while queue:
            v = queue.popleft()
            for w in adj0[v]:
                if w in seen or w not in an_s:
                    continue
                seen.add(w)
                if w in inner:
                    queue.append(w)
        for j in seen - {i}:
            adj[i].add(j)
            adj[j].add(i)

    edges = []
    for i in range(d):
        for j in sorted(adj[i]):
            if j <= i:
                continue
            if j in adj0[i] and (j in an_with_s[i]) != (i in an_with_s[j]):
                marks = ancestral_marks(i in an_with_s[j], j in an_with_s[i])
            elif i not in aff and j not in aff:
                marks = (TAIL, TAIL)
            elif j in aff and (i not in aff or i in an_plain[j]):
                marks = (TAIL, ARROW)
            elif i in aff and (j not in aff or j in an_plain[i]):
                marks = (ARROW, TAIL)
            else:
                marks = (ARROW, ARROW)
            edges.append((i, j, *marks))
    for j in range(d):
        if j in target or j in inner:
            edges.append((j, d, ARROW, TAIL))
    kinds = [VertexKind.OBSERVED] * d + [VertexKind.ZETA]
    return MixedGraph(_names(g) + ["zeta"], edges, kinds)
