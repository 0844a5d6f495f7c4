"""From labelled fault records to correction-coefficient weights.

A synthetic corpus stands in for field data: faults depend mostly on
altitude.  Three weighting schemes are derived (Gini, OOB permutation,
entropy) and an expert pairwise matrix picks between them.

    python demos/choosing_weights.py
"""

import numpy as np

from typhoon_resilience.ahp_decision import decide, load_pairwise
from typhoon_resilience.feature_engine import FEATURES, coefficients
from typhoon_resilience.grid_case import bundled_path
from typhoon_resilience.importance import all_schemes, planted_single, synthesize_dataset

planted = 0.7 * planted_single("altitude") + 0.3 * planted_single("max_wind")
data = synthesize_dataset(seed=4, size=640, planted=planted)
print(f"{len(data.y)} records, {int(data.y.sum())} faults")

schemes, forest = all_schemes(data, n_trees=100, seed=0)
print("\n" + "feature".ljust(16) + "".join(s.name.rjust(10) for s in schemes))
for i, f in enumerate(FEATURES):
    print(f.ljust(16) + "".join(f"{s.weights[i]:10.3f}" for s in schemes))

A = load_pairwise(bundled_path("pairwise_expert.csv"))
d = decide(schemes, A)
print(f"\npairwise consistency ratio {d.priority.cr:.4f}")
for name, score in zip(d.names, d.scores):
    print(f"  {name}: {score:.4f}")
chosen = schemes[d.selected]
print(f"selected {chosen.name}")

# a benign and a hazardous tower site
sites = np.array([[20.0, 50.0, 5.0, 2.0, 5.0, 55.0, 2.0],
                  [55.0, 500.0, 800.0, 40.0, 88.0, 30.0, 40.0]])
W, k = coefficients(chosen.weights / chosen.weights.sum(), sites)
for w, kk in zip(W, k):
    print(f"  score {w:.3f} -> k = {kk:.3f}")
