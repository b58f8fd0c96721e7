"""Interventional twin graphs and the separation queries they license.

A twin graph couples the observed post-intervention world with an unobserved
pre-intervention world in which selection happened.  Only the vertices
downstream of the intervention are split into two copies; both copies share
one exogenous noise vertex.  The intervention indicator ``zeta`` points into
the directly targeted vertices of the observed world.

Vertex layout of ``TwinGraph.graph`` (D observed, T selection, A affected):

* ``0..D-1``            X_i, the observed world
* ``D``                 zeta
* ``D+1..D+T``          S*_j, selection in the basal world
* next A                X*_i for affected i, ascending
* next A                eps_i for affected i, ascending
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import InvalidArgument
from .graph import Dag, DagWithSelection, VertexKind, d_separated, descendants

__all__ = [
    "TargetCollection",
    "TwinGraph",
    "build_twin",
    "implies_ci",
    "implies_invariance",
    "normalize_target",
]


def normalize_target(g: DagWithSelection, target: Iterable[int]) -> frozenset[int]:
    members = frozenset(int(v) for v in target)
    for v in members:
        if not 0 <= v < g.n:
            raise InvalidArgument(f"target vertex {v} does not exist")
        if v >= g.d:
            raise InvalidArgument(f"target vertex {v} is a selection vertex")
    return members


@dataclass(frozen=True)
class TargetCollection:
    """Ordered intervention targets; the first one is always the empty set."""

    targets: tuple[frozenset[int], ...]

    def __post_init__(self):
        ts = tuple(frozenset(int(v) for v in t) for t in self.targets)
        if not ts or ts[0]:
            raise InvalidArgument("the first target of a collection must be empty")
        if any(v < 0 for t in ts for v in t):
            raise InvalidArgument("target members must be non-negative")
        object.__setattr__(self, "targets", ts)

    @classmethod
    def of(cls, *interventions: Iterable[int]) -> "TargetCollection":
        """Collection ``[{}, *interventions]``."""
        return cls((frozenset(),) + tuple(frozenset(t) for t in interventions))

    @classmethod
    def parse(cls, text: str) -> "TargetCollection":
        """Parse ``"1|2,3"`` (0-based; ``|`` separates settings, ``-`` is an empty target).

        The leading empty target is implicit.
        """
        text = text.strip()
        if not text:
            return cls.of()
        out = []
        for part in text.split("|"):
            part = part.strip()
            if part in ("-", ""):
                out.append(frozenset())
                continue
            try:
                out.append(frozenset(int(x) for x in part.split(",")))
            except ValueError as exc:
                raise InvalidArgument(f"bad target specification {part!r}") from exc
        return cls.of(*out)

    def format(self) -> str:
        return "|".join(",".join(map(str, sorted(t))) or "-" for t in self.targets[1:])

    @property
    def k(self) -> int:
        """Number of interventional settings (excluding the observational one)."""
        return len(self.targets) - 1

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, k: int) -> frozenset[int]:
        return self.targets[k]

    def __iter__(self):
        return iter(self.targets)


@dataclass(frozen=True, eq=False)
class TwinGraph:
    base: DagWithSelection
    target: frozenset[int]
    affected: frozenset[int]
    graph: Dag
    _star: dict[int, int] = field(repr=False)
    _eps: dict[int, int] = field(repr=False)

    @property
    def zeta(self) -> int:
        return self.base.d

    def x(self, i: int) -> int:
        return i

    def s_star(self, j: int) -> int:
        """Index of the basal-world copy of selection vertex ``j`` (0-based among selections)."""
        return self.base.d + 1 + j

    @property
    def selection_vertices(self) -> frozenset[int]:
        return frozenset(self.s_star(j) for j in range(self.base.t))

    def x_star(self, i: int) -> int:
        return self._star[i]

    def eps(self, i: int) -> int:
        return self._eps[i]

    def partition(self) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
        """(observed, latent, selected) vertex sets of the twin graph."""
        d = self.base.d
        observed = frozenset(range(d + 1))
        selected = self.selection_vertices
        latent = frozenset(self._star.values()) | frozenset(self._eps.values())
        return observed, latent, selected


def build_twin(g: DagWithSelection, target: Iterable[int]) -> TwinGraph:
    """Construct the interventional twin graph of ``g`` for one target."""
    target = normalize_target(g, target)
    d, t = g.d, g.t
    affected = frozenset(v for v in descendants(g, target) if v < d)
    aff = sorted(affected)
    star = {i: d + 1 + t + k for k, i in enumerate(aff)}
    eps = {i: d + 1 + t + len(aff) + k for k, i in enumerate(aff)}

    def s_star(s: int) -> int:
        return d + 1 + (s - d)

    edges = []
    for a, b in g.sorted_edges():
        if b >= d:  # selection edge: drawn in the basal world
            edges.append((star[a] if a in affected else a, s_star(b)))
            continue
        edges.append((a, b))
        if a in affected:
            edges.append((star[a], star[b]))
        elif b in affected:
            edges.append((a, star[b]))
    for i in aff:
        edges.append((eps[i], i))
        edges.append((eps[i], star[i]))
    edges.extend((d, i) for i in sorted(target))

    n = d + 1 + t + 2 * len(aff)
    kinds = ([VertexKind.OBSERVED] * d + [VertexKind.ZETA] + [VertexKind.SELECTION] * t
             + [VertexKind.COUNTERFACTUAL] * len(aff) + [VertexKind.NOISE] * len(aff))
    names = ([g.names[i] for i in range(d)] + ["zeta"] + [f"{g.names[d + j]}*" for j in range(t)]
             + [f"{g.names[i]}*" for i in aff] + [f"eps_{g.names[i]}" for i in aff])
    graph = Dag(n, edges, kinds, names)
    return TwinGraph(g, target, affected, graph, star, eps)


def _observed_set(tw: TwinGraph, vs: Iterable[int], what: str) -> frozenset[int]:
    out = frozenset(int(v) for v in vs)
    for v in out:
        if not 0 <= v < tw.base.d:
            raise InvalidArgument(f"{what} contains non-observed vertex {v}")
    return out


def _as_iter(x: Iterable[int] | int) -> Sequence[int] | Iterable[int]:
    return (x,) if isinstance(x, int) else x


def implies_ci(tw: TwinGraph, a: Iterable[int] | int, b: Iterable[int] | int,
               c: Iterable[int] = ()) -> bool:
    """Whether the twin graph implies ``X_a _||_ X_b | X_c`` in the interventional distribution."""
    a = _observed_set(tw, _as_iter(a), "a")
    b = _observed_set(tw, _as_iter(b), "b")
    c = _observed_set(tw, c, "c")
    return d_separated(tw.graph, a, b, c | tw.selection_vertices | {tw.zeta})


def implies_invariance(tw: TwinGraph, a: Iterable[int] | int, c: Iterable[int] = ()) -> bool:
    """Whether ``p(X_a | X_c)`` is implied unchanged by the intervention."""
    a = _observed_set(tw, _as_iter(a), "a")
    c = _observed_set(tw, c, "c")
    return d_separated(tw.graph, {tw.zeta}, a, c | tw.selection_vertices)
