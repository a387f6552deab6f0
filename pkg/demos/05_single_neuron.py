"""
One retained neuron
===================

A single neuron ``a relu(<w, x>)`` misses the target by at least
``sin(theta)`` where theta is the angle between w and w*.  Landing within
angle ``2 eps`` of w* has the probability of a spherical cap, which
shrinks like ``eps^(d-1)``.
"""

import numpy as np

from neuroprune.sphere import cap_probability, cap_probability_beta, grid_inf_sup

###############################################################################
# Error floor against angle.

for theta in (0.0, 0.05, 0.3, np.pi / 4, np.pi / 2, 2.5):
    print(f"theta={theta:.3f}  sin={np.sin(theta):.4f}  grid inf_a max witness error={grid_inf_sup(theta)[0]:.4f}")

###############################################################################
# Cap probability: quadrature and the incomplete-beta closed form.

eps = 0.05
for d in (2, 3, 5, 10, 20):
    p = cap_probability(d, 2 * eps)
    print(f"d={d:>2}  Pr(theta <= 2 eps) = {p:.3e}  (beta form {cap_probability_beta(d, 2 * eps):.3e})"
          f"  per-dim log rate {np.log(p) / d:+.3f}")
