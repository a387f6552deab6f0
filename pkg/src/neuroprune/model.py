"""Target neurons, random bias-free two-layer ReLU networks and the
two-coordinate input families used to restrict them to one dimension.

Family ``i`` (1-based, ``1 <= i <= d // 2``) is the path
``x_i(t) = t * e_{2i-1} + e_{2i}``; in 0-based storage the variable entry
sits at index ``2i - 2`` and the constant 1 at index ``2i - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .pwl import Pwl1D, pwl_sum
from .rng import as_generator


def relu(x):
    return np.maximum(x, 0.0)


def _ro(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TargetNeuron:
    """``f(x) = relu(<w_star, x>)`` with ``w_star`` normalized to unit length."""

    w_star: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=float).reshape(-1)
        if w.size < 2:
            raise ValueError(f"target dimension must be >= 2, got {w.size}")
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("target weights must be finite and nonzero")
        object.__setattr__(self, "w_star", _ro(w / norm))

    @property
    def d(self) -> int:
        return self.w_star.size

    def __call__(self, x):
        return eval_target(self, x)


@dataclass(frozen=True, eq=False)
class HiddenNeuron:
    w: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "w", _ro(np.asarray(self.w, dtype=float).reshape(-1)))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True, eq=False)
class TwoLayerNet:
    """``g(x) = sum_j alpha_j relu(<w_j, x>)``.

    Weights are held as an ``(n_h, d)`` matrix ``W`` and a length-``n_h``
    vector ``alpha``; :attr:`neurons` gives the per-neuron view.
    """

    W: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if W.shape[0] < 1:
            raise ValueError("network needs at least one hidden neuron")
        if W.shape[0] != alpha.size:
            raise ValueError(f"{W.shape[0]} weight rows but {alpha.size} output weights")
        object.__setattr__(self, "W", _ro(W))
        object.__setattr__(self, "alpha", _ro(alpha))

    @classmethod
    def from_neurons(cls, neurons: Iterable[HiddenNeuron]) -> "TwoLayerNet":
        neurons = list(neurons)
        if not neurons:
            raise ValueError("network needs at least one hidden neuron")
        dims = {n.w.size for n in neurons}
        if len(dims) != 1:
            raise ValueError(f"hidden neurons disagree on dimension: {sorted(dims)}")
        return cls(np.stack([n.w for n in neurons]), np.array([n.alpha for n in neurons]))

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def n_h(self) -> int:
        return self.W.shape[0]

    @property
    def neurons(self) -> list[HiddenNeuron]:
        return [HiddenNeuron(w, a) for w, a in zip(self.W, self.alpha)]

    def neuron(self, j: int) -> HiddenNeuron:
        return HiddenNeuron(self.W[j], self.alpha[j])

    def append(self, other: "TwoLayerNet") -> "TwoLayerNet":
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        return TwoLayerNet(np.vstack([self.W, other.W]), np.concatenate([self.alpha, other.alpha]))

    def __call__(self, x):
        return eval_subnet(self, SubsetMask.full(self.n_h), x)


@dataclass(frozen=True)
class SubsetMask:
    selected: frozenset

    def __post_init__(self):
        sel = frozenset(int(i) for i in self.selected)
        if any(i < 0 for i in sel):
            raise ValueError("mask indices must be non-negative")
        object.__setattr__(self, "selected", sel)

    @classmethod
    def of(cls, *indices: int) -> "SubsetMask":
        return cls(frozenset(indices))

    @classmethod
    def full(cls, n_h: int) -> "SubsetMask":
        return cls(frozenset(range(n_h)))

    @classmethod
    def from_bits(cls, bits: int) -> "SubsetMask":
        return cls(frozenset(j for j in range(int(bits).bit_length()) if bits >> j & 1))

    @property
    def k(self) -> int:
        return len(self.selected)

    def indices(self) -> list[int]:
        return sorted(self.selected)

    def bits(self) -> int:
        return sum(1 << j for j in self.selected)

    def check(self, n_h: int):
        bad = [j for j in self.selected if j >= n_h]
        if bad:
            raise ValueError(f"mask indices {sorted(bad)} out of range for {n_h} neurons")

    def __len__(self):
        return len(self.selected)


@dataclass(frozen=True)
class InputFamily:
    i: int

    def __post_init__(self):
        if int(self.i) < 1:
            raise ValueError(f"family index is 1-based, got {self.i}")
        object.__setattr__(self, "i", int(self.i))

    @property
    def var_index(self) -> int:
        """0-based coordinate carrying ``t``."""
        return 2 * self.i - 2

    @property
    def const_index(self) -> int:
        """0-based coordinate fixed at 1."""
        return 2 * self.i - 1

    def check(self, d: int):
        if 2 * self.i > d:
            raise ValueError(f"family {self.i} needs d >= {2 * self.i}, got d={d}")

    def point(self, t, d: int) -> np.ndarray:
        """``x_i(t)`` for scalar or array ``t``; arrays give one row per value."""
        self.check(d)
        t = np.asarray(t, dtype=float)
        x = np.zeros(t.shape + (d,))
        x[..., self.var_index] = t
        x[..., self.const_index] = 1.0
        return x

    def t_range(self, r: float) -> tuple[float, float]:
        """Parameter range keeping ``x_i(t)`` inside the ball of radius ``r``."""
        if r < 1:
            raise ValueError("radius must be at least 1 for the family to meet the ball")
        half = float(np.sqrt(r * r - 1.0))
        return -half, half


def families(d: int) -> list[InputFamily]:
    return [InputFamily(i) for i in range(1, d // 2 + 1)]


# sampling ---------------------------------------------------------------------

def sample_network(d: int, n_h: int, rng) -> TwoLayerNet:
    """Hidden weights ~ N(0, I_d), output weights ~ N(0, 1), all independent."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if n_h < 1:
        raise ValueError(f"n_h must be >= 1, got {n_h}")
    gen = as_generator(rng)
    W = gen.standard_normal((n_h, d))
    alpha = gen.standard_normal(n_h)
    return TwoLayerNet(W, alpha)


def sample_unit_sphere(d: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the unit sphere in R^d by normalizing Gaussians."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    gen = as_generator(rng)
    shape = (d,) if size is None else (size, d)
    while True:
        g = gen.standard_normal(shape)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.all(norms > 0):
            return g / norms


def sample_target(d: int, rng) -> TargetNeuron:
    return TargetNeuron(sample_unit_sphere(d, rng))


# evaluation -------------------------------------------------------------------

def _check_x(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"input has dimension {x.shape[-1]}, expected {d}")
    return x


def eval_target(t: TargetNeuron, x):
    x = _check_x(x, t.d)
    out = relu(x @ t.w_star)
    return out if np.ndim(out) else float(out)


def eval_subnet(net: TwoLayerNet, mask: SubsetMask, x):
    x = _check_x(x, net.d)
    mask.check(net.n_h)
    idx = mask.indices()
    if not idx:
        out = np.zeros(x.shape[:-1])
    else:
        out = relu(x @ net.W[idx].T) @ net.alpha[idx]
    return out if np.ndim(out) else float(out)


# restriction to families --------------------------------------------------------

def restrict_target(t: TargetNeuron, fam: InputFamily) -> Pwl1D:
    """``s -> relu(w*_{2i-1} s + w*_{2i})`` as a Pwl1D (breakpoint ``-w*_{2i}/w*_{2i-1}``)."""
    fam.check(t.d)
    return Pwl1D.relu(t.w_star[fam.var_index], t.w_star[fam.const_index])


def restrict_neuron(n: HiddenNeuron, fam: InputFamily) -> Pwl1D:
    """``s -> alpha relu(w_{2i-1} s + w_{2i})``; jump magnitude ``|alpha w_{2i-1}|``."""
    fam.check(n.w.size)
    return Pwl1D.relu(n.w[fam.var_index], n.w[fam.const_index], n.alpha)


def restrict_subnet(net: TwoLayerNet, mask: SubsetMask, fam: InputFamily) -> Pwl1D:
    mask.check(net.n_h)
    return pwl_sum(restrict_neuron(net.neuron(j), fam) for j in mask.indices())


def family_breakpoints(net: TwoLayerNet, fam: InputFamily) -> np.ndarray:
    """``t_{i,j} = -w_{j,2i} / w_{j,2i-1}`` for every hidden neuron (inf where degenerate)."""
    fam.check(net.d)
    a = net.W[:, fam.var_index]
    b = net.W[:, fam.const_index]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a != 0, -b / np.where(a != 0, a, 1.0), np.inf)


def family_jumps(net: TwoLayerNet, fam: InputFamily) -> np.ndarray:
    """Signed slope jump ``alpha_j |w_{j,2i-1}|`` each neuron adds at its breakpoint."""
    fam.check(net.d)
    return net.alpha * np.abs(net.W[:, fam.var_index])
