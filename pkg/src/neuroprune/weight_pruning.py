"""Weight-pruning baseline: approximate the target by pruning single weights.

Raw network (first layer of width ``m = 2 * pool * d``, one ReLU output unit)::

    g(x) = scale * relu( sum_m v_m * relu(<W_m, x>) )

First-layer neurons come in ``d`` blocks of ``2 * pool``; block ``j`` serves
coordinate ``j``.  Pruning keeps only weight ``W[m, j]`` of each neuron in
block ``j``, turning it into ``|s| relu(+-x_j)`` with ``s = W[m, j]``.  Using
``x_j = relu(x_j) - relu(-x_j)``, the output pre-activation matches
``<w*, x>`` when, per coordinate, the kept products ``v_m s_m`` over ``s > 0``
sum to ``w*_j`` and the kept ``v_m |s_m|`` over ``s < 0`` sum to ``-w*_j``.
Both are random subset sum problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import TargetNeuron, families, relu
from .rng import as_generator
from .subset_sum import SubsetSumNotFound, rss_subset

DEFAULT_POOL = 30


@dataclass(frozen=True, eq=False)
class TwoHiddenLayerNet:
    W: np.ndarray
    v: np.ndarray
    scale: float = 1.0
    w_mask: np.ndarray | None = None
    v_mask: np.ndarray | None = None

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if W.shape[0] != v.size:
            raise ValueError(f"{W.shape[0]} first-layer neurons but {v.size} combination weights")
        w_mask = np.ones(W.shape, bool) if self.w_mask is None else np.asarray(self.w_mask, bool)
        v_mask = np.ones(v.shape, bool) if self.v_mask is None else np.asarray(self.v_mask, bool)
        if w_mask.shape != W.shape or v_mask.shape != v.shape:
            raise ValueError("mask dimensions must match weight dimensions")
        for name, arr in (("W", W), ("v", v), ("w_mask", w_mask), ("v_mask", v_mask)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def width(self) -> int:
        return self.W.shape[0]

    def hidden(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return relu(x @ (self.W * self.w_mask).T)

    def preactivation(self, x):
        return self.hidden(x) @ (self.v * self.v_mask)

    def __call__(self, x):
        out = self.scale * relu(self.preactivation(x))
        return out if np.ndim(out) else float(out)

    def kept_weights(self) -> int:
        return int(self.w_mask.sum() + self.v_mask.sum())


def sample_two_hidden_layer_net(d: int, pool: int, rng) -> TwoHiddenLayerNet:
    gen = as_generator(rng)
    m = 2 * pool * d
    return TwoHiddenLayerNet(gen.standard_normal((m, d)), gen.standard_normal(m))


def coordinate_block(j: int, width: int, d: int) -> np.ndarray:
    per = width // d
    return np.arange(j * per, (j + 1) * per)


@dataclass
class WeightPrunedResult:
    net: TwoHiddenLayerNet | None
    residuals: np.ndarray = field(repr=False)
    error_bound: float = math.inf
    failed_coordinate: int | None = None
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.net is not None


def build_weight_pruned_approx(raw: TwoHiddenLayerNet, target: TargetNeuron, epsilon: float,
                               r: float = 2.0) -> WeightPrunedResult:
    """Prune ``raw`` so its output approximates ``target`` on the radius-``r`` ball.

    Each subset sum is solved to tolerance ``epsilon / (r sqrt(d))``.  The
    certified bound is ``r * ||rho||_2`` where ``rho_j`` is the worse of
    coordinate ``j``'s two subset-sum residuals; it bounds
    ``|preactivation - <w*, x>|`` on the ball, and ReLU is 1-Lipschitz.
    """
    d = raw.d
    if target.d != d:
        raise ValueError(f"network dimension {d} != target dimension {target.d}")
    if raw.width % d:
        raise ValueError("first-layer width must split into equal per-coordinate blocks")
    if raw.scale != 1.0:
        raise ValueError("the construction needs a unit output scale")
    tol = epsilon / (r * math.sqrt(d))
    w_mask = np.zeros(raw.W.shape, bool)
    v_mask = np.zeros(raw.v.shape, bool)
    residuals = np.zeros((d, 2))
    for j in range(d):
        block = coordinate_block(j, raw.width, d)
        s = raw.W[block, j]
        for col, (sign, goal) in enumerate(((1.0, target.w_star[j]), (-1.0, -target.w_star[j]))):
            members = block[np.sign(s) == sign]
            products = raw.v[members] * np.abs(raw.W[members, j])
            try:
                picked = rss_subset(products, goal, tol)
            except SubsetSumNotFound as exc:
                residuals[j, col] = exc.best_error
                return WeightPrunedResult(None, residuals, math.inf, j,
                                          f"coordinate {j} ({'+' if sign > 0 else '-'} side): {exc}")
            keep = members[list(picked)]
            w_mask[keep, j] = True
            v_mask[keep] = True
            residuals[j, col] = abs(goal - products[list(picked)].sum())
    pruned = replace(raw, w_mask=w_mask, v_mask=v_mask)
    bound = r * float(np.linalg.norm(residuals.max(axis=1)))
    return WeightPrunedResult(pruned, residuals, bound)


def family_error_two_layer(net: TwoHiddenLayerNet, target: TargetNeuron, r: float) -> float:
    """Exact max over families of ``sup |net - f|`` along the family inside the ball.

    Along a family the pre-activation is linear on each side of ``t = 0``,
    so the error's breakpoints are 0, the target breakpoint and the
    pre-activation's zero crossings.  The network is evaluated by its own
    forward pass at those points.
    """
    worst = 0.0
    for fam in families(net.d):
        lo, hi = fam.t_range(r)
        x = fam.point(np.array([-1.0, 0.0, 1.0]), net.d)
        pm, p0, pp = net.preactivation(x)
        pts = [lo, hi, 0.0]
        for slope, side in ((pp - p0, 1), (p0 - pm, -1)):
            if slope != 0:
                root = -p0 / slope
                if side * root > 0:
                    pts.append(root)
        a_t, b_t = target.w_star[fam.var_index], target.w_star[fam.const_index]
        if a_t != 0:
            pts.append(-b_t / a_t)
        t = np.array([p for p in pts if lo <= p <= hi])
        xs = fam.point(t, net.d)
        err = np.abs(net(xs) - relu(xs @ target.w_star))
        worst = max(worst, float(err.max()))
    return worst
