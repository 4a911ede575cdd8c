"""Reduced mutual information versus plain mutual information.

Plain MI between a partition and random labels is positive and grows with
the number of labels; the reduced version subtracts the log count of tables
with the observed margins, which removes most of that bias.

Run: python demos/partition_similarity.py
"""
import math
from collections import Counter

import numpy as np

from polarscope.contingency import log_omega, log_omega_method
from polarscope.polarization import rmi

rng = np.random.default_rng(0)
n = 400
truth = {str(i): i % 3 for i in range(n)}


def plain_nmi(a, b):
    users = list(a)
    cells = Counter((a[u], b[u]) for u in users)
    ra, rb = Counter(a.values()), Counter(b.values())
    mi = sum(c / n * math.log(n * c / (ra[r] * rb[s])) for (r, s), c in cells.items())
    h = lambda cnt: -sum(c / n * math.log(c / n) for c in cnt.values())  # noqa: E731
    return 2 * mi / (h(ra) + h(rb))


# %% random labelings with more and more groups
for k in (2, 5, 20, 50):
    noise = {u: int(rng.integers(k)) for u in truth}
    print(f"k={k:3d}  plain NMI {plain_nmi(truth, noise):.3f}   RMI {rmi(truth, noise):.3f}")

# %% the counting term and which route computes it
for rows, cols in [((200, 200), (100, 150, 150)), ((150, 130, 120), (100, 150, 150)),
                   ((100, 100, 100, 100), (200, 120, 80))]:
    print(rows, cols, "log Omega = %.2f (%s)" % (log_omega(rows, cols), log_omega_method(rows, cols)))
