"""
Hermite expansions and the Ornstein-Uhlenbeck semigroup
=======================================================

A model space is R^n with the standard Gaussian, a graded basis of
normalized Hermite polynomials up to total degree K, and a tensor
Gauss-Hermite grid with Q nodes per axis.
"""

import numpy as np

from gausscap import GaussModelSpace, HermiteExpansion, bessel_quadrature, bessel_spectral
from gausscap import mehler_apply, spectral_apply

space = GaussModelSpace(2, 6, 12)
print("basis size:", space.dim, "grid size:", space.grid.size)
print("weights sum to", space.grid.weights.sum())

# %%
# A random polynomial, damped so high degrees carry less weight.
rng = np.random.default_rng(0)
u = HermiteExpansion(space, rng.standard_normal(space.dim) / (1.0 + space.orders))

# %%
# The semigroup is diagonal on the basis: coefficient alpha decays like
# exp(-t |alpha|). Mehler's integral on the grid gives the same numbers.
x = rng.standard_normal((4, 2))
for t in (0.1, 0.5, 2.0):
    gap = np.max(np.abs(mehler_apply(u, t, x, space.grid) - spectral_apply(u, t)(x)))
    print(f"t={t}: Mehler vs spectral {gap:.1e}")

# %%
# Long times forget everything except the mean.
print("mean:", u.coeffs[0], " P_20 u(x):", spectral_apply(u, 20.0)(x))

# %%
# Bessel potentials. The spectral form divides by (1+|alpha|)^{r/2}; the
# quadrature form integrates P_t against a Gamma density in time.
for r in (1.0, 2.0, 3.0):
    gap = np.max(np.abs(bessel_quadrature(u, r, x, space.grid) - bessel_spectral(u, r)(x)))
    print(f"r={r}: spectral vs quadrature {gap:.1e}")
