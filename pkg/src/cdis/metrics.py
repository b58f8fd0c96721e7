"""Comparison of an estimated PAG against the discoverable ground truth."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

from .errors import InvalidArgument
from .fci import Pag
from .graph import DagWithSelection, MixedGraph
from .twin import TargetCollection

__all__ = ["MetricsReport", "compare", "evaluate", "ground_truth_pag"]


@dataclass(frozen=True)
class MetricsReport:
    arrow_precision: float
    arrow_recall: float
    arrow_f1: float
    edgemark_accuracy: float
    skeleton_shd: int

    def to_row(self) -> dict:
        return asdict(self)


def _graph(g: Pag | MixedGraph) -> MixedGraph:
    return g.snapshot() if isinstance(g, Pag) else g


def _directed(m: MixedGraph) -> frozenset[tuple[int, int]]:
    out = set()
    for i, j, _, _ in m.edges():
        if m.is_directed(i, j):
            out.add((i, j))
        elif m.is_directed(j, i):
            out.add((j, i))
    return frozenset(out)


def _ratio(hits: int, total: int, other_total: int) -> float:
    # an empty denominator scores 1 only when the other side is empty too
    if total == 0:
        return 1.0 if other_total == 0 else 0.0
    return hits / total


def compare(est: Pag | MixedGraph, truth: Pag | MixedGraph) -> MetricsReport:
    """Arrow precision/recall/F1, endpoint-mark accuracy and skeleton SHD."""
    est, truth = _graph(est), _graph(truth)
    if est.n != truth.n:
        raise InvalidArgument(f"graphs differ in size ({est.n} vs {truth.n})")
    e_arr, t_arr = _directed(est), _directed(truth)
    hits = len(e_arr & t_arr)
    precision = _ratio(hits, len(e_arr), len(t_arr))
    recall = _ratio(hits, len(t_arr), len(e_arr))
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    e_adj, t_adj = est.adjacencies(), truth.adjacencies()
    union = e_adj | t_adj
    if union:
        match = 0
        for i, j in union:
            if (i, j) in e_adj and (i, j) in t_adj:
                match += (est.endpoint(j, i) is truth.endpoint(j, i)) + (est.endpoint(i, j) is truth.endpoint(i, j))
        accuracy = match / (2 * len(union))
    else:
        accuracy = 1.0
    return MetricsReport(precision, recall, f1, accuracy, len(e_adj ^ t_adj))


def ground_truth_pag(g: DagWithSelection, targets: TargetCollection | Sequence) -> Pag:
    """The observational PAG that discovery reaches with exact answers."""
    from .discovery import cdis_oracle

    return cdis_oracle(g, targets).pag0


def evaluate(est: Pag | MixedGraph, truth_model: tuple[DagWithSelection, TargetCollection | Sequence]
             ) -> MetricsReport:
    g, targets = truth_model
    if _graph(est).n != g.d:
        raise InvalidArgument(f"estimate has {_graph(est).n} vertices, model has {g.d}")
    return compare(est, ground_truth_pag(g, targets))
