"""Exact approximation error of a pruned network along the input families."""

from __future__ import annotations

import numpy as np

from .model import (InputFamily, SubsetMask, TargetNeuron, TwoLayerNet, families,
                    restrict_subnet, restrict_target)
from .pwl import Pwl1D, residual, sup_abs_on_interval


def family_residual(net: TwoLayerNet, mask: SubsetMask, target: TargetNeuron,
                    fam: InputFamily) -> Pwl1D:
    """``g_S(x_i(t)) - f(x_i(t))`` as a Pwl1D in ``t``."""
    return residual(restrict_subnet(net, mask, fam), restrict_target(target, fam))


def sup_error_along_family(net: TwoLayerNet, mask: SubsetMask, target: TargetNeuron,
                           fam: InputFamily, r: float) -> float:
    """``sup |g_S - f|`` over the part of family ``fam`` inside the radius-``r`` ball."""
    if net.d != target.d:
        raise ValueError(f"network dimension {net.d} != target dimension {target.d}")
    a, b = fam.t_range(r)
    return sup_abs_on_interval(family_residual(net, mask, target, fam), a, b)[0]


def family_errors(net, mask, target, r) -> np.ndarray:
    return np.array([sup_error_along_family(net, mask, target, fam, r) for fam in families(net.d)])


def max_family_error(net, mask, target, r) -> float:
    """Largest family-restricted sup error; a lower bound on the sup over the ball."""
    return float(family_errors(net, mask, target, r).max())


def success_along_all_families(net, mask, target, epsilon: float, r: float, cap_c: float = 1.0) -> bool:
    return max_family_error(net, mask, target, r) <= cap_c * epsilon


def sampled_ball_error(net, mask, target, r: float, rng, n: int = 20_000) -> float:
    """Max ``|g_S - f|`` over ``n`` random points of the radius-``r`` sphere.

    ``g_S - f`` is positively homogeneous, so its sup over the ball is
    attained on the boundary sphere; the sample max is a lower bound.
    """
    from .model import eval_subnet, eval_target, sample_unit_sphere

    x = r * sample_unit_sphere(net.d, rng, size=n)
    return float(np.max(np.abs(eval_subnet(net, mask, x) - eval_target(target, x))))
