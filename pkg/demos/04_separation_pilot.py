"""
Separation pilot: neuron pruning vs weight pruning
==================================================

Calibration run for the desk-scale separation thresholds.  It uses seeds
1000..1049, disjoint from the seeds the acceptance suite enforces on, and
writes its CSV and metadata to ``docs/pilot``.
"""

from pathlib import Path

import numpy as np

from neuroprune.experiments import parse_config, run_campaign, write_outputs

out = Path(__file__).resolve().parent.parent / "docs" / "pilot"
cfg = parse_config(overrides=dict(name="separation", d=4, r=2.0, epsilon=0.05, n_h=18,
                                  n_h_sweep=(6, 12, 18), pool=30, trials=50, seed=1000, out=str(out)))
res = run_campaign(cfg)
write_outputs(res, out)

###############################################################################
# Success rates and the spread of the best neuron-pruning error.

print(res.summary["success_rate"])
for n_h in (6, 12, 18):
    e = np.array([r[3] for r in res.rows if r[2] == "neuron" and r[1] == n_h])
    print(f"N_h={n_h:>2}: min error quantiles (0, .1, .5, .9) = {np.round(np.quantile(e, [0, .1, .5, .9]), 3)}")
w = np.array([r[3] for r in res.rows if r[2] == "weight"])
print(f"weight arm: max measured error {w.max():.2e} (tolerance {cfg.epsilon})")
