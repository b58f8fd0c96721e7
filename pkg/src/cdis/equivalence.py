"""Markov equivalence of (DAG, target collection) pairs.

Two models are equivalent when, setting by setting, the MAGs of their twin
graphs share adjacencies and v-structures.  :func:`ci_signature` provides the
brute-force definition (the full set of implied CI and invariance
statements) that the graphical criterion is checked against.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import lru_cache

from .errors import InvalidArgument, ResourceLimit
from .graph import DagWithSelection, MixedGraph
from .mag import mag_of_twin, mag_observational
from .twin import TargetCollection, build_twin, implies_ci, implies_invariance

__all__ = [
    "CiSignature",
    "MagKey",
    "mag_key",
    "markov_equivalent",
    "ci_signature",
    "setting_signature",
    "enumerate_dags",
    "enumerate_selection_sets",
    "enumerate_models",
    "enumerate_target_collections",
    "equivalence_class",
    "class_atlas",
    "MAX_SIGNATURE_D",
    "MAX_ENUMERATE_D",
]

MAX_SIGNATURE_D = 8
MAX_ENUMERATE_D = 6

Statement = tuple[int, int, int, tuple[int, ...]]


@dataclass(frozen=True)
class MagKey:
    """Adjacencies and v-structures of one MAG: what the criterion compares."""

    adjacencies: frozenset[tuple[int, int]]
    v_structures: frozenset[tuple[int, int, int]]

    @classmethod
    def of(cls, m: MixedGraph) -> "MagKey":
        return cls(m.adjacencies(), m.v_structures())


def mag_key(g: DagWithSelection, target: Iterable[int]) -> MagKey:
    return MagKey.of(mag_of_twin(g, target))


def _coerce(t) -> TargetCollection:
    return t if isinstance(t, TargetCollection) else TargetCollection(tuple(t))


def _check_pair(g1: DagWithSelection, t1, g2: DagWithSelection, t2):
    t1, t2 = _coerce(t1), _coerce(t2)
    if g1.d != g2.d:
        raise InvalidArgument(f"observed dimensions differ ({g1.d} vs {g2.d})")
    if len(t1) != len(t2):
        raise InvalidArgument(f"target collections differ in size ({len(t1)} vs {len(t2)})")
    return t1, t2


def markov_equivalent(g1: DagWithSelection, t1, g2: DagWithSelection, t2) -> bool:
    """Setting-wise comparison of twin-graph MAG adjacencies and v-structures."""
    t1, t2 = _check_pair(g1, t1, g2, t2)
    return all(mag_key(g1, a) == mag_key(g2, b) for a, b in zip(t1, t2))


@dataclass(frozen=True)
class CiSignature:
    """Canonically ordered implied statements.

    ``(k, i, j, C)`` with ``i < j < d`` means ``X_i _||_ X_j | X_C`` in
    setting ``k``; ``(k, d, j, C)`` (the index ``d`` standing for zeta)
    means ``p(X_j | X_C)`` is invariant between settings 0 and ``k``.
    """

    d: int
    statements: tuple[Statement, ...]

    def __contains__(self, item) -> bool:
        k, i, j, c = item
        return (k, i, j, tuple(sorted(c))) in self._set

    @property
    def _set(self) -> frozenset:
        s = self.__dict__.get("_cache")
        if s is None:
            s = frozenset(self.statements)
            object.__setattr__(self, "_cache", s)
        return s

    def __len__(self) -> int:
        return len(self.statements)


def _subsets(items: list[int]) -> Iterator[tuple[int, ...]]:
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def setting_signature(g: DagWithSelection, target: Iterable[int]) -> frozenset[tuple[int, int, tuple[int, ...]]]:
    """Implied statements ``(i, j, C)`` of one twin graph (``i == d`` for invariances)."""
    if g.d > MAX_SIGNATURE_D:
        raise ResourceLimit(f"CI signatures enumerate 2^D conditioning sets; D={g.d} exceeds {MAX_SIGNATURE_D}")
    tw = build_twin(g, target)
    d = g.d
    out = set()
    for i, j in itertools.combinations(range(d), 2):
        rest = [v for v in range(d) if v not in (i, j)]
        for c in _subsets(rest):
            if implies_ci(tw, i, j, c):
                out.add((i, j, c))
    for j in range(d):
        rest = [v for v in range(d) if v != j]
        for c in _subsets(rest):
            if implies_invariance(tw, j, c):
                out.add((d, j, c))
    return frozenset(out)


def ci_signature(g: DagWithSelection, t) -> CiSignature:
    t = _coerce(t)
    stmts = [(k, i, j, c) for k, target in enumerate(t) for (i, j, c) in setting_signature(g, target)]
    return CiSignature(g.d, tuple(sorted(stmts)))


# ---------------------------------------------------------------------------
# enumeration


@lru_cache(maxsize=None)
def _dag_edge_lists(d: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    pairs = list(itertools.combinations(range(d), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (a, b), s in zip(pairs, states):
            if s == 1:
                edges.append((a, b))
            elif s == 2:
                edges.append((b, a))
        if _acyclic(d, edges):
            out.append(tuple(sorted(edges)))
    return tuple(out)


def _acyclic(d: int, edges: list[tuple[int, int]]) -> bool:
    indeg = [0] * d
    ch = [[] for _ in range(d)]
    for a, b in edges:
        indeg[b] += 1
        ch[a].append(b)
    stack = [v for v in range(d) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in ch[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == d


def enumerate_dags(d: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Edge lists of every labelled DAG on ``d`` vertices, in a fixed order."""
    if d > MAX_ENUMERATE_D:
        raise ResourceLimit(f"DAG enumeration is guarded at d <= {MAX_ENUMERATE_D} (got {d})")
    if d < 0:
        raise InvalidArgument("d must be non-negative")
    return iter(_dag_edge_lists(d))


def enumerate_selection_sets(d: int, t_max: int) -> list[tuple[tuple[int, ...], ...]]:
    """Selection configurations: up to ``t_max`` distinct non-empty parent sets.

    Parent sets within a configuration are sorted, so relabelling the
    selection vertices never produces a second copy of the same model.
    """
    parent_sets = [c for r in range(1, d + 1) for c in itertools.combinations(range(d), r)]
    out = []
    for t in range(t_max + 1):
        out.extend(itertools.combinations(parent_sets, t))
    return out


def enumerate_models(d: int, t_max: int) -> Iterator[DagWithSelection]:
    """Every DAG over ``d`` observed vertices with up to ``t_max`` selection vertices."""
    dags = list(enumerate_dags(d))
    sels = enumerate_selection_sets(d, t_max)
    for edges in dags:
        for sel in sels:
            yield DagWithSelection.from_parents(d, edges, sel)


def enumerate_target_collections(d: int, k_max: int, *, allow_empty: bool = False) -> list[TargetCollection]:
    """Ordered collections ``[{}, I_1, .., I_K]`` with ``K <= k_max`` and non-empty ``I_k``."""
    subsets = [frozenset(c) for r in range(0 if allow_empty else 1, d + 1)
               for c in itertools.combinations(range(d), r)]
    out = []
    for k in range(k_max + 1):
        for combo in itertools.product(subsets, repeat=k):
            out.append(TargetCollection.of(*combo))
    return out


def equivalence_class(g: DagWithSelection, t, universe: Iterable[tuple[DagWithSelection, TargetCollection]]):
    """Members of ``universe`` equivalent to ``(g, t)``; incomparable members are skipped."""
    t = _coerce(t)
    ref = tuple(mag_key(g, a) for a in t)
    out = []
    for h, s in universe:
        s = _coerce(s)
        if h.d != g.d or len(s) != len(t):
            continue
        if all(mag_key(h, b) == k for b, k in zip(s, ref)):
            out.append((h, s))
    return out


def _model_row_keys(args: tuple) -> tuple[frozenset, dict]:
    g, targets = args
    m = mag_observational(g)
    arrows = frozenset((i, j) for i, j, a, b in m.edges() if m.is_directed(i, j)) \
        | frozenset((j, i) for i, j, a, b in m.edges() if m.is_directed(j, i))
    return arrows, {t: mag_key(g, t) for t in targets}


def class_atlas(d: int, t_max: int, k_max: int, max_rows: int = 1_000_000, jobs: int = 1) -> list[dict]:
    """Partition the enumerated universe into equivalence classes.

    Returns one row per (model, target collection) with the class id, class
    size, and the number of ``-->`` edges of the observational MAG shared by
    every member of the class.  ``jobs > 1`` computes the per-model keys in
    worker processes; the output does not depend on ``jobs``.
    """
    models = list(enumerate_models(d, t_max))
    collections = enumerate_target_collections(d, k_max)
    if len(models) * len(collections) > max_rows:
        raise ResourceLimit(f"atlas would have {len(models) * len(collections)} rows (limit {max_rows})")
    targets = sorted({t for c in collections for t in c}, key=lambda t: (len(t), sorted(t)))
    work = [(g, targets) for g in models]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_model = list(pool.map(_model_row_keys, work, chunksize=64))
    else:
        per_model = [_model_row_keys(w) for w in work]
    arrows = [a for a, _ in per_model]
    key_cache = {(mid, t): key for mid, (_, keys) in enumerate(per_model) for t, key in keys.items()}
    rows = []
    class_ids: dict[tuple, int] = {}
    class_arrows: dict[int, frozenset] = {}
    class_size: dict[int, int] = {}
    for mid in range(len(models)):
        for coll in collections:
            key = (len(coll),) + tuple(key_cache[(mid, t)] for t in coll)
            cid = class_ids.setdefault(key, len(class_ids))
            class_size[cid] = class_size.get(cid, 0) + 1
            class_arrows[cid] = class_arrows.get(cid, arrows[mid]) & arrows[mid]
            rows.append({"model_id": mid, "targets": coll.format(), "class_id": cid})
    for row in rows:
        cid = row["class_id"]
        row["class_size"] = class_size[cid]
        row["identifiable_arrow_count"] = len(class_arrows[cid])
    return rows
