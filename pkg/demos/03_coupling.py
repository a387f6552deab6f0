"""
Coupling the neuron process with the chain
==========================================

Drive the broken-bin count of a random network, its capped version and
the birth-death chain from one random stream.  With p below every birth
probability and q above every death probability the chain never exceeds
the capped process, which never exceeds the original.
"""

import numpy as np

from neuroprune import BinPartition, InputFamily, RngStream, sample_network
from neuroprune.processes import (calibrate_chain_params, default_t_cap, sample_nondegenerate_target,
                                  simulate_coupled)

d, r, eps, c, n_h = 4, 2.0, 0.05, 1 / 16, 18
fam = InputFamily(1)
part = BinPartition(eps, r)
T = default_t_cap(r, eps)

###############################################################################
# Calibrate p and q from birth/death estimates at states visited by pilots.

params, info = calibrate_chain_params(
    d, fam, part, c, T, n_h, RngStream(0, 5), n_trials=10_000,
    target_sampler=lambda g: sample_nondegenerate_target(d, fam, part, c, g))
print(params, info)

###############################################################################
# One coupled run, step by step.

gen = RngStream(1, 3).generator()
target = sample_nondegenerate_target(d, fam, part, c, gen)
run = simulate_coupled(sample_network(d, n_h, gen), None, fam, target, part, n_h, T, params, gen, c)
print(" s  orig  cap  bd   birth   death")
for s in range(n_h + 1):
    rates = f"{run.birth_rates[s]:.3f}  {run.death_rates[s]:.4f}" if s < n_h else ""
    print(f"{s:>2}  {run.orig.states[s]:>4} {run.cap.states[s]:>4} {run.bd.states[s]:>3}   {rates}")
print("precondition held:", run.precondition_ok, " domination:", run.domination_ok)

###############################################################################
# Many runs.

ok = pre = 0
for seed in range(200):
    g = RngStream(seed, 3).generator()
    tg = sample_nondegenerate_target(d, fam, part, c, g)
    res = simulate_coupled(sample_network(d, n_h, g), None, fam, tg, part, n_h, T, params, g, c)
    pre += res.precondition_ok
    ok += res.domination_ok
print(f"200 runs: precondition {pre}, full domination {ok}")
