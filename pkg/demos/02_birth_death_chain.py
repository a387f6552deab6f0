"""
The capped birth-death chain
============================

A chain on ``{0, ..., T}`` that starts at 1, steps up with probability p
and down with probability q.  When births outpace deaths the chance of
sitting at 0 after k steps decays geometrically until k reaches the order
of T.
"""

import numpy as np

from neuroprune import ChainParams, RngStream, bd_distribution, fit_log_slope, simulate_bd_batch

params = ChainParams(p=0.4, q=0.15, t_cap=40)
print("drift condition q < min(1/3, p/2):", params.drift_condition)

###############################################################################
# The exact distribution comes from iterating the transition operator.

dist = bd_distribution(params, 80)
hit0 = dist[:, 0]
print("Pr(B_k = 0) for k = 0..10:", np.round(hit0[:11], 5))
print("mass conservation error:", np.max(np.abs(dist.sum(axis=1) - 1)))

###############################################################################
# Log-linear fit over the window k in [5, 2T/3].

ks = np.arange(5, 2 * params.t_cap // 3 + 1)
print(f"fitted slope of log Pr(B_k = 0): {fit_log_slope(ks, hit0[ks]):.4f}")

###############################################################################
# Monte Carlo overlay.

n = 50_000
paths = simulate_bd_batch(params, 80, n, RngStream(0))
mc = (paths == 0).mean(axis=0)
se = np.sqrt(hit0 * (1 - hit0) / n)
for k in (1, 5, 10, 20, 40, 80):
    print(f"k={k:>2}  exact {hit0[k]:.5f}  mc {mc[k]:.5f}  z {(mc[k] - hit0[k]) / max(se[k], 1e-12):+.2f}")
