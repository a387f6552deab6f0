"""Neuron pruning versus weight pruning for a single bias-free ReLU target."""

from .rng import RngStream
from .pwl import Pwl1D, pwl_sum, residual, sup_abs_on_interval, minimax_affine_3pts
from .model import (TargetNeuron, HiddenNeuron, TwoLayerNet, SubsetMask, InputFamily, families,
                    sample_network, sample_unit_sphere, sample_target, eval_target, eval_subnet,
                    restrict_target, restrict_neuron, restrict_subnet)
from .bins import BinPartition, BrokenBinReport, BinTracker, is_bin_broken, broken_bin_count
from .approx import sup_error_along_family, success_along_all_families, max_family_error
from .processes import (ChainParams, bd_distribution, bd_exact_hit0, fit_log_slope, simulate_bd,
                        simulate_bd_batch, simulate_original, simulate_capped, simulate_coupled,
                        estimate_transition_probs)
from .search import exhaustive_neuron_prune, greedy_neuron_prune
from .subset_sum import rss_subset, SubsetSumNotFound
from .weight_pruning import build_weight_pruned_approx, sample_two_hidden_layer_net
from .sphere import cap_probability, grid_inf_sup

__version__ = "0.1.0"
