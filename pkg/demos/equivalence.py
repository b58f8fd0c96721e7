"""When can interventions tell selection apart from causation?

Run: python3 demos/equivalence.py
"""

from collections import Counter

from cdis.equivalence import class_atlas, markov_equivalent
from cdis.graph import DagWithSelection
from cdis.twin import TargetCollection

T = TargetCollection.of
selected = DagWithSelection(2, 1, [(0, 2), (1, 2)])  # X1 and X2 both drive selection
causal = DagWithSelection(2, 0, [(1, 0)])  # X2 causes X1, no selection

print("intervene on X1 only:       ", markov_equivalent(selected, T({0}), causal, T({0})))
print("one setting per variable:   ", markov_equivalent(selected, T({0}, {1}), causal, T({0}, {1})))

rows = class_atlas(2, 1, 1)
sizes = Counter((r["targets"] or "none", r["class_size"]) for r in rows)
print("\nclass sizes over all two-variable models, by target:")
for (targets, size), count in sorted(sizes.items()):
    print(f"  target {targets:4s} class size {size:2d}: {count} models")
