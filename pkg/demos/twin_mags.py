"""Maximal ancestral graphs of twin graphs, by closed form and by inducing paths.

Run: python3 demos/twin_mags.py
"""

from cdis.graph import DagWithSelection
from cdis.mag import mag_of_twin, twin_mag_general


def show(m):
    return ", ".join(f"{m.names[i]} {m.edge_symbol(i, j)} {m.names[j]}" for i, j, _, _ in m.edges())


clinical = DagWithSelection(2, 1, [(0, 2), (1, 2)])  # X1 -> S <- X2
chain = DagWithSelection(3, 1, [(0, 1), (1, 2), (2, 3)])  # X1 -> X2 -> X3 -> S

for label, g, target in (("clinical", clinical, ()), ("clinical", clinical, {0}),
                         ("chain", chain, ()), ("chain", chain, {0}), ("chain", chain, {2})):
    fast, slow = mag_of_twin(g, target), twin_mag_general(g, target)
    verdict = "agree" if fast == slow else "DISAGREE"
    print(f"{label:8s} target {sorted(target)!s:6s} [{verdict}]  {show(fast)}")
