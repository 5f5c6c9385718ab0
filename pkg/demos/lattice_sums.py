"""
Riesz sums over the lattice and Riemann sums of indicators
==========================================================

Power-law interactions lead to sums ``sum_j |j/(2N) - a|^{-beta}``.  Their
growth in N depends on whether ``beta`` is below, at or above the
dimension, and on how close the anchor ``a`` sits to a lattice site.  The
P-nearest weights instead lead to Riemann sums of box indicators, whose
error is governed by counting sites near the box edges.
"""

from fractions import Fraction

import numpy as np

from mflattice.lattice import lattice_sum_bound_check
from mflattice.metrics import indicator_mass, riemann_discretization_check, riemann_sum

N_values = [2**k for k in range(4, 13)]
for beta in (0.5, 1.0, 2.0):
    for anchor in (0.0, 1 / 6):
        rep = lattice_sum_bound_check(beta, 1, N_values, 3, np.array([anchor]))
        ratios = " ".join(f"{r:.3f}" for r in rep.ratios[::2])
        print(f"beta={beta:3g} ({rep.regime:8s}) a={anchor:.3f}: sum / predicted = {ratios}  "
              f"spread {rep.spread:.2f}")

# Exact arithmetic for the indicator R = 1/4 centred at a = 0, N = 10: 11 of 21 sites are inside.
R = Fraction(1, 4)
print("Riemann sum", riemann_sum(R, 0, 10), "integral", indicator_mass(R, 0))

# The error is at most one site per box edge.  Near the boundary with R < 1/2
# this can exceed 1/(2N).
anchors = [Fraction(j, 128) for j in range(-64, 65)]
for R in (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(1)):
    rep = riemann_discretization_check(R, anchors, [8, 32, 128, 512])
    where = f" at (a, N) = {rep.worst[:2]}" if rep.worst else ""
    print(f"R={float(R):4g}: worst 2N |error| = {rep.worst_scaled:.3f}{where}, "
          f"{len(rep.violations)} of {rep.checked} above 1/(2N)")
