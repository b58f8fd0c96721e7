"""Discovery with exact independence answers.

Run: python3 demos/oracle_discovery.py
"""

from cdis.discovery import cdis_oracle
from cdis.graph import DagWithSelection
from cdis.twin import TargetCollection

T = TargetCollection.of


def show(p):
    return ", ".join(f"{p.names[i]} {p.edge_symbol(i, j)} {p.names[j]}" for i, j, _, _ in p.edges()) or "(empty)"


selected = DagWithSelection(2, 1, [(0, 2), (1, 2)])
print("X1 -> S <- X2, intervene on X1:        ", show(cdis_oracle(selected, T({0})).pag0))
print("X1 -> S <- X2, intervene on X1 and X2: ", show(cdis_oracle(selected, T({0}, {1})).pag0))

collider = DagWithSelection(3, 1, [(0, 1), (1, 3), (2, 3)])  # X1 -> X2 -> S <- X3
result = cdis_oracle(collider, T({0}))
print("\nX1 -> X2 -> S <- X3, intervene on X1")
print("  observational PAG:", show(result.pag0))
print("  setting-1 PAG:    ", show(result.per_setting[0]))
print("  pseudo-targets:   ", [sorted(t) for t in result.estimated_pseudo_targets])

plain = DagWithSelection(3, 0, [(0, 1), (1, 2)])
print("\nX1 -> X2 -> X3 without selection, intervene on X1:", show(cdis_oracle(plain, T({0})).pag0))
