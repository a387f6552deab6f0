"""
Breakpoints, bins and the broken-bin count
==========================================

Restrict a random ReLU network to one input family and watch the residual
against the target pick up breakpoints.  A bin is broken when no affine
function fits the residual on it to within ``c * eps``.
"""

import numpy as np

from neuroprune import (BinPartition, BinTracker, InputFamily, RngStream, broken_bin_count,
                        restrict_target, sample_network, sample_target)
from neuroprune.model import family_breakpoints, family_jumps
from neuroprune.pwl import sup_abs_on_interval

d, r, eps, c = 4, 2.0, 0.05, 1 / 16
fam = InputFamily(1)
part = BinPartition(eps, r)
print(f"{part.n_bins} bins tile [{part.left:.4f}, {part.right:.4f}]; last width {part.widths()[-1]:.4f}")

###############################################################################
# The target restricted to the family is a single ReLU in t.  The residual
# starts as its negative, so it already has one breakpoint.

target = sample_target(d, RngStream(1))
h0 = -restrict_target(target, fam)
count, report = broken_bin_count(h0, part, c)
print("target breakpoint:", h0.breakpoints, "broken bins at start:", report.broken_bins())

###############################################################################
# Breakpoints of random neurons along the family are standard Cauchy, so
# most land far outside the interval and do nothing.

net = sample_network(d, 40, RngStream(2))
t = family_breakpoints(net, fam)
inside = np.abs(t) < part.right
print(f"{inside.sum()} of {t.size} neurons put a breakpoint inside the interval")

###############################################################################
# Add the neurons one at a time.  Each arrival changes at most one bin.

tracker = BinTracker.from_pwl(h0, part, c)
counts = [tracker.count]
for bp, jump, a in zip(t, family_jumps(net, fam), net.alpha):
    tracker.add(float(bp), float(np.sign(a) * jump))
    counts.append(tracker.count)
print("broken-bin trajectory:", counts)

###############################################################################
# A broken bin forces a sup error of at least c * eps whatever the target
# does on that bin, as long as its own breakpoint lies elsewhere.

for k in np.flatnonzero(tracker.status)[:3]:
    lo, hi = part.bin(int(k))
    print(f"bin {k}: [{lo:+.3f}, {hi:+.3f}]")
print("level c * eps =", c * eps, "; residual sup on the interval:",
      sup_abs_on_interval(h0, part.left, part.right)[0])
