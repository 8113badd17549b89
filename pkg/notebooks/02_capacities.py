"""
Two capacities of the same set
==============================

The potential capacity looks for the cheapest nonnegative f whose Bessel
potential is at least 1 on the set. The variational one looks for the
cheapest Sobolev function equal to 1 there. They are comparable up to
constants; here we watch the ratio.
"""

from gausscap import GaussModelSpace, SobolevParams, ball, capacity, equivalence_ratio, slab

space = GaussModelSpace(1, 10, 16)
params = SobolevParams(2, 2.0)

# %%
# Capacity grows with the set and reaches 1 on everything. The set only
# enters through the grid nodes in its fattened neighborhood (the default
# margin), so radii that capture the same nodes give the same value.
print("nodes:", space.grid.nodes[:, 0].round(3))
for rho in (0.25, 0.5, 1.0, 2.0, 4.0):
    res = capacity(ball([0.0], rho), params, space)
    print(f"ball radius {rho}: cap = {res.value:.4f} converged={res.converged}")

# %%
# Comparing the definitions on a few sets, and refining the grid.
for region in (ball([0.0], 0.5), slab([1.0], 1.0, 0.5), slab([1.0], 1.5, 1.0)):
    coarse = equivalence_ratio(region, params, space)
    fine = equivalence_ratio(region, params, GaussModelSpace(1, 10, 24))
    print(f"{region.to_dict()['kind']:>5}: ratio {coarse.ratio:.4f} -> {fine.ratio:.4f}")

# %%
# The same set weighs more for larger r or p.
for r in (1, 2):
    for p in (1.5, 2.0, 3.0):
        v = capacity(ball([0.0], 0.5), SobolevParams(r, p), space).value
        print(f"r={r} p={p}: {v:.4f}")
