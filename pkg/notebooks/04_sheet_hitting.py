"""
Does the sheet hit the set?
===========================

A two-parameter Ornstein-Uhlenbeck sheet on a parameter grid, sampled
exactly by AR(1) recursions along each axis. Smaller balls are hit less
often and have smaller (2,2)-capacity; the two orderings should agree.
"""

import numpy as np

from gausscap import GaussModelSpace, SheetGrid, ball, kakutani_experiment, sample_sheet

grid = SheetGrid.box(2, 1, upper=1.0, spacing=0.25)
s = sample_sheet(grid, seed=0)
print("one sample on the 5x5 grid:")
print(np.round(s.values[..., 0], 2))

# %%
spaces = [GaussModelSpace(1, q - 1, q) for q in (81, 101, 121)]
table = kakutani_experiment([ball([0.0], rho) for rho in (1.0, 0.5, 0.25)], grid, 10_000,
                            spaces, seed=0, capacity_margin=0.0)
for row in table.rows:
    lo, hi = row.hit.ci
    print(f"set {row.set_id}: hit {row.hit.estimate:.4f} [{lo:.4f}, {hi:.4f}]  cap {row.capacity:.4f}")
print("rank correlation:", table.rank_correlation, "flags:", table.flags)
