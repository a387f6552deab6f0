"""Neuron-pruning search: exhaustive over all masks, or greedy forward selection.

Both searches score masks on a fixed set of probe points per family: the
ends of the family interval plus every breakpoint (network or target) inside
it.  Any subnetwork's residual along a family is piecewise linear with
breakpoints among those points, so the max over them is the exact sup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approx import max_family_error
from .model import (SubsetMask, TargetNeuron, TwoLayerNet, families, family_breakpoints, relu)

DEFAULT_MAX_N = 24
_TABLE_ENTRIES = 1 << 22


@dataclass(frozen=True)
class SearchResult:
    best_mask: SubsetMask
    best_error: float
    nodes_explored: int
    method: str

    @classmethod
    def certify(cls, net, target, r, mask, fast_error, nodes, method, rtol=1e-9) -> "SearchResult":
        """Recompute the mask's error through Pwl1D arithmetic and cross-check it."""
        exact = max_family_error(net, mask, target, r)
        if not math.isclose(exact, fast_error, rel_tol=rtol, abs_tol=1e-12):
            raise AssertionError(f"probe-point error {fast_error!r} disagrees with exact {exact!r}")
        return cls(mask, exact, nodes, method)


def probe_values(net: TwoLayerNet, target: TargetNeuron, r: float):
    """Neuron and target values at every family's probe points.

    Returns ``(V, F)`` with ``V`` of shape ``(n_h, P)`` and ``F`` of shape
    ``(P,)``; probe points of all families are concatenated.
    """
    if net.d != target.d:
        raise ValueError(f"network dimension {net.d} != target dimension {target.d}")
    cols_v, cols_f = [], []
    for fam in families(net.d):
        lo, hi = fam.t_range(r)
        bps = family_breakpoints(net, fam)
        a_t, b_t = target.w_star[fam.var_index], target.w_star[fam.const_index]
        pts = [np.array([lo, hi]), bps[(bps > lo) & (bps < hi)]]
        if a_t != 0 and lo < -b_t / a_t < hi:
            pts.append(np.array([-b_t / a_t]))
        t = np.unique(np.concatenate(pts))
        a = net.W[:, fam.var_index][:, None]
        b = net.W[:, fam.const_index][:, None]
        cols_v.append(net.alpha[:, None] * relu(a * t + b))
        cols_f.append(relu(a_t * t + b_t))
    return np.concatenate(cols_v, axis=1), np.concatenate(cols_f)


def _subset_table(V: np.ndarray) -> np.ndarray:
    """Row ``m`` holds the sum of rows of ``V`` selected by the bits of ``m``."""
    G = np.zeros((1, V.shape[1]))
    for row in V:
        G = np.vstack([G, G + row])
    return G


def exhaustive_neuron_prune(net: TwoLayerNet, target: TargetNeuron, epsilon: float, r: float,
                            cap_c: float = 1.0, max_n: int = DEFAULT_MAX_N) -> SearchResult:
    """Minimum family-restricted sup error over all ``2^n_h - 1`` nonempty masks.

    Ties go to the mask with the smallest bit pattern.  ``epsilon`` and
    ``cap_c`` do not affect the search; they are accepted for symmetry with
    the success check.
    """
    n = net.n_h
    if n > max_n:
        raise ValueError(f"n_h={n} exceeds the exhaustive cap {max_n}; use greedy_neuron_prune")
    V, F = probe_values(net, target, r)
    low = min(n, max(1, int(math.log2(max(1, _TABLE_ENTRIES // V.shape[1])))))
    table = _subset_table(V[:low]) - F
    best_err, best_bits = math.inf, 0
    for high in range(1 << (n - low)):
        shift = V[low:][[j for j in range(n - low) if high >> j & 1]].sum(axis=0)
        err = np.abs(table + shift).max(axis=1)
        if high == 0:
            err[0] = math.inf
        m = int(np.argmin(err))
        if err[m] < best_err:
            best_err, best_bits = float(err[m]), (high << low) | m
    mask = SubsetMask.from_bits(best_bits)
    return SearchResult.certify(net, target, r, mask, best_err, (1 << n) - 1, "exhaustive")


def brute_force_min_error(net, target, r) -> tuple[float, SubsetMask]:
    """Plain loop over every nonempty mask with Pwl1D errors; slow reference."""
    best = (math.inf, None)
    for bits in range(1, 1 << net.n_h):
        mask = SubsetMask.from_bits(bits)
        e = max_family_error(net, mask, target, r)
        if e < best[0]:
            best = (e, mask)
    return best


def greedy_neuron_prune(net: TwoLayerNet, target: TargetNeuron, epsilon: float, r: float,
                        cap_c: float = 1.0, k_max: int | None = None) -> SearchResult:
    """Forward selection: add the neuron that most reduces the error; stop when none does."""
    k_max = net.n_h if k_max is None else k_max
    if not 1 <= k_max <= net.n_h:
        raise ValueError(f"k_max must lie in [1, {net.n_h}], got {k_max}")
    V, F = probe_values(net, target, r)
    current = -F
    chosen: list[int] = []
    best = math.inf
    nodes = 0
    while len(chosen) < k_max:
        free = np.array([j for j in range(net.n_h) if j not in chosen])
        errs = np.abs(current + V[free]).max(axis=1)
        nodes += free.size
        i = int(np.argmin(errs))
        if errs[i] >= best:
            break
        best = float(errs[i])
        chosen.append(int(free[i]))
        current = current + V[free[i]]
    mask = SubsetMask(frozenset(chosen))
    return SearchResult.certify(net, target, r, mask, best, nodes, "greedy")
