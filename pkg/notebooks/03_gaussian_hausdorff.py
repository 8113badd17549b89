"""
Gaussian Hausdorff measure of a line
====================================

In the plane, the codimension-one Gaussian measure of the line {x1 = c}
is the Gaussian density at c. The estimator covers sections of the set
with small balls and weights each ball by the density at its center.
"""

import math

from gausscap import gaussian_hausdorff, slab

for c in (0.0, 0.5, 1.0, 2.0):
    rep = gaussian_hausdorff(slab([1.0, 0.0], c, 0.0), 1.0, n=2, seed=0)
    exact = math.exp(-0.5 * c * c) / math.sqrt(2 * math.pi)
    print(f"x1={c}: estimate {rep.value:.6f}, density {exact:.6f}")
