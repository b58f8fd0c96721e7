"""Three-step discovery of the observational PAG from multi-setting data.

1. Observational PAG from setting 0.
2. One skeleton per interventional setting over the variables plus the
   setting indicator ``zeta``, pooling setting 0 with setting ``k``;
   adjacencies already in the observational PAG are kept without testing.
3. Alternate between orienting each per-setting PAG (with the observational
   arrows and ``zeta``'s exogeneity as background knowledge) and transferring
   its marks back to the observational PAG, until nothing changes.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from .ci import CiProvider, Dataset, FisherZCi, OracleCi, PooledScope, SettingScope
from .errors import InvalidArgument
from .fci import Pag, directed, fas, fci_plus
from .graph import ARROW, CIRCLE, TAIL, DagWithSelection, VertexKind
from .twin import TargetCollection

__all__ = ["CdisResult", "cdis", "cdis_oracle", "cdis_from_data"]

log = logging.getLogger(__name__)

MAX_ITERATIONS = 1000


@dataclass
class CdisResult:
    pag0: Pag
    per_setting: list[Pag]
    estimated_pseudo_targets: list[frozenset[int]]
    iteration_log: list[dict] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.pag0.n

    def check_pruning(self) -> bool:
        """Every observational adjacency is present in every per-setting PAG."""
        adj0 = self.pag0.adjacencies()
        return all(adj0 <= pk.adjacencies() for pk in self.per_setting)

    def to_json(self) -> dict:
        return {
            "pag0": self.pag0.to_json(),
            "per_setting": [{"k": k + 1, **pk.to_json()} for k, pk in enumerate(self.per_setting)],
            "pseudo_targets": [sorted(t) for t in self.estimated_pseudo_targets],
            "iteration_log": self.iteration_log,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _names(d: int) -> tuple[str, ...]:
    return tuple(f"X{i + 1}" for i in range(d))


def cdis(provider: CiProvider, *, strict: bool = True, names: Sequence[str] | None = None,
         max_cond: int | None = -1) -> CdisResult:
    """Run discovery against ``provider`` (settings ``0..K``).

    ``strict`` raises :class:`~cdis.errors.OrientationConflict` on any mark
    conflict (appropriate for oracle answers).  Otherwise conflicts are
    logged and skipped, except that undirected marks transferred from the
    per-setting PAGs override a conflicting arrowhead.
    """
    d = provider.d
    K = provider.n_settings - 1
    names = tuple(names) if names else _names(d)
    if len(names) != d:
        raise InvalidArgument("names must list one entry per variable")
    log_entries: list[dict] = []

    def note(**entry):
        log_entries.append(entry)
        log.debug("cdis: %s", entry)

    # step 1
    pag0 = fci_plus(fas(SettingScope(provider, 0, names), max_cond=max_cond, strict=strict))
    note(step="1", rule="fci_plus", marks=_marks(pag0))

    # step 2
    kinds = (VertexKind.OBSERVED,) * d + (VertexKind.ZETA,)
    sure = pag0.adjacencies()
    pagks = [fas(PooledScope(provider, k, names + ("zeta",)), sure=sure, max_cond=max_cond,
                 strict=strict, kinds=kinds) for k in range(1, K + 1)]
    for k, pk in enumerate(pagks, start=1):
        note(step="2", k=k, rule="fas", adjacencies=sorted(map(list, pk.adjacencies())))

    marginal_change = {}

    def changed_marginal(k: int, i: int) -> bool:
        if (k, i) not in marginal_change:
            marginal_change[(k, i)] = not provider.invariance(k, i, ())
        return marginal_change[(k, i)]

    for it in range(1, MAX_ITERATIONS + 1):
        before = _marks(pag0)

        # 3.1
        for idx, pk in enumerate(pagks):
            k = idx + 1
            knowledge = []
            for i, j in sorted(pag0.directed_edges()):
                knowledge += directed(i, j)
            for j in pk.neighbors(d):
                knowledge += directed(d, j)
            pagks[idx] = fci_plus(pk, knowledge)
            note(step="3.1", iteration=it, k=k, rule="fci_plus", marks=_marks(pagks[idx]))

        # 3.2
        def update(rule: str, k, i: int, j: int, mi, mj, force: bool):
            changed = False
            for a, b, m in ((j, i, mi), (i, j, mj)):
                if pag0.endpoint(a, b) is not m:
                    changed |= pag0.orient(a, b, m, f"3.2{rule}", (i, j), force=force)
            if changed:
                note(step="3.2", iteration=it, k=k, rule=rule, edge=[i, j],
                     result=pag0.snapshot().edge_symbol(i, j))

        lenient_force = not strict
        for i, j in sorted(pag0.adjacencies()):
            for idx, pk in enumerate(pagks):
                k = idx + 1
                # (a) undirected in some per-setting PAG
                if pk.is_undirected(i, j):
                    update("a", k, i, j, TAIL, TAIL, lenient_force)
                for u, v in ((i, j), (j, i)):
                    if not pk.is_directed(u, v):
                        continue
                    # (b) u --> v in setting k and u o-- v observationally
                    if pag0.endpoint(v, u) is CIRCLE and pag0.endpoint(u, v) is TAIL:
                        update("b", k, u, v, TAIL, TAIL, lenient_force)
                    # (c) u --> v in setting k and u's marginal changed
                    elif changed_marginal(k, u):
                        update("c", k, u, v, TAIL, ARROW, False)
            # (d) opposite directions in two settings
            fwd = [k for k, pk in enumerate(pagks, start=1) if pk.is_directed(i, j)]
            bwd = [k for k, pk in enumerate(pagks, start=1) if pk.is_directed(j, i)]
            if fwd and bwd:
                update("d", (fwd[0], bwd[0]), i, j, TAIL, TAIL, lenient_force)

        # 3.3
        pag0 = fci_plus(pag0)
        after = _marks(pag0)
        note(step="3.3", iteration=it, rule="fci_plus", marks=after)
        if after == before:
            break
    else:  # pragma: no cover - monotone marks bound the loop
        raise RuntimeError("refinement loop did not converge")

    pseudo = [frozenset(pk.neighbors(d)) for pk in pagks]
    return CdisResult(pag0, pagks, pseudo, log_entries)


def _marks(p: Pag) -> list[list]:
    return [[i, j, a.value, b.value] for i, j, a, b in p.edges()]


def cdis_oracle(g: DagWithSelection, targets: TargetCollection | Sequence) -> CdisResult:
    """Discovery with exact answers read from the model's twin graphs."""
    return cdis(OracleCi(g, targets), strict=True)


def cdis_from_data(ds: Dataset, alpha: float | None = None, *, max_cond: int | None = -1) -> CdisResult:
    """Discovery with Fisher-Z tests on ``ds`` (conflicts resolved leniently)."""
    return cdis(FisherZCi(ds, alpha), strict=False, names=ds.names, max_cond=max_cond)
