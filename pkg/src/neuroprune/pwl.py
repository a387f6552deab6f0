"""Continuous piecewise-linear functions of one variable.

A :class:`Pwl1D` is stored as the line it follows left of every breakpoint
plus one ReLU ramp per breakpoint::

    h(t) = slope * t + intercept + sum_j jumps[j] * max(t - breakpoints[j], 0)

``jumps[j]`` is the right slope minus the left slope at ``breakpoints[j]``.
Continuity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12
_CANCEL_ULPS = 8 * np.finfo(float).eps


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Pwl1D:
    breakpoints: np.ndarray
    jumps: np.ndarray
    slope: float = 0.0
    intercept: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        bps = _frozen(self.breakpoints)
        jumps = _frozen(self.jumps)
        if bps.shape != jumps.shape:
            raise ValueError("breakpoints and jumps must have equal length")
        if bps.size and not np.all(np.diff(bps) > 0):
            raise ValueError("breakpoints must be strictly increasing; use Pwl1D.build")
        if not (np.all(np.isfinite(bps)) and np.all(np.isfinite(jumps))):
            raise ValueError("breakpoints and jumps must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "slope", float(self.slope))
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def build(cls, breakpoints, jumps, slope=0.0, intercept=0.0, degenerate=False) -> "Pwl1D":
        """Normalize arbitrary (unsorted, possibly coincident) breakpoints.

        Breakpoints closer than ``MERGE_TOL`` are merged with summed jumps;
        merged jumps that cancel to rounding level are dropped.
        """
        bps = np.asarray(breakpoints, dtype=float).reshape(-1)
        js = np.asarray(jumps, dtype=float).reshape(-1)
        if bps.shape != js.shape:
            raise ValueError("breakpoints and jumps must have equal length")
        if bps.size == 0:
            return cls(bps, js, slope, intercept, degenerate)
        order = np.argsort(bps, kind="stable")
        bps, js = bps[order], js[order]
        # cluster starts: gap to the previous breakpoint exceeds the tolerance
        starts = np.flatnonzero(np.concatenate(([True], np.diff(bps) > MERGE_TOL)))
        merged_b = bps[starts]
        merged_j = np.add.reduceat(js, starts)
        scale = np.add.reduceat(np.abs(js), starts)
        keep = np.abs(merged_j) > _CANCEL_ULPS * scale
        return cls(merged_b[keep], merged_j[keep], slope, intercept, degenerate)

    @classmethod
    def affine(cls, slope: float, intercept: float, degenerate=False) -> "Pwl1D":
        return cls(np.empty(0), np.empty(0), slope, intercept, degenerate)

    @classmethod
    def relu(cls, a: float, b: float, scale: float = 1.0) -> "Pwl1D":
        """``t -> scale * max(a*t + b, 0)``; flagged degenerate when ``a == 0``."""
        if a == 0.0:
            return cls.affine(0.0, scale * max(b, 0.0), degenerate=True)
        bp = -b / a
        if a > 0:
            return cls(np.array([bp]), np.array([scale * a]))
        # active on the left: follows scale*(a t + b), flat zero to the right
        return cls(np.array([bp]), np.array([-scale * a]), scale * a, scale * b)

    # evaluation -------------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.slope * t + self.intercept
        if self.breakpoints.size:
            ramps = np.maximum(t[..., None] - self.breakpoints, 0.0)
            out = out + ramps @ self.jumps
        return out if out.ndim else float(out)

    @property
    def n_breakpoints(self) -> int:
        return int(self.breakpoints.size)

    def is_affine(self) -> bool:
        return self.breakpoints.size == 0

    def slopes(self) -> np.ndarray:
        """Slope on each of the ``n_breakpoints + 1`` segments, left to right."""
        return self.slope + np.concatenate(([0.0], np.cumsum(self.jumps)))

    def breakpoints_in(self, a: float, b: float, *, closed: bool = False):
        """Breakpoints (and their jumps) lying strictly inside ``(a, b)``."""
        if closed:
            sel = (self.breakpoints >= a) & (self.breakpoints <= b)
        else:
            sel = (self.breakpoints > a) & (self.breakpoints < b)
        return self.breakpoints[sel], self.jumps[sel]

    # arithmetic -------------------------------------------------------------

    def __add__(self, other: "Pwl1D") -> "Pwl1D":
        if not isinstance(other, Pwl1D):
            return NotImplemented
        return pwl_sum([self, other])

    def __neg__(self) -> "Pwl1D":
        return Pwl1D(self.breakpoints, -self.jumps, -self.slope, -self.intercept, self.degenerate)

    def __sub__(self, other: "Pwl1D") -> "Pwl1D":
        if not isinstance(other, Pwl1D):
            return NotImplemented
        return pwl_sum([self, -other])

    def __repr__(self):
        return (f"Pwl1D(n_breakpoints={self.n_breakpoints}, slope={self.slope:.6g}, "
                f"intercept={self.intercept:.6g})")


ZERO = Pwl1D.affine(0.0, 0.0)


def pwl_sum(parts: Iterable[Pwl1D]) -> Pwl1D:
    parts = list(parts)
    if not parts:
        return ZERO
    bps = np.concatenate([p.breakpoints for p in parts])
    jumps = np.concatenate([p.jumps for p in parts])
    slope = float(sum(p.slope for p in parts))
    intercept = float(sum(p.intercept for p in parts))
    return Pwl1D.build(bps, jumps, slope, intercept)


def residual(net_part: Pwl1D, target_part: Pwl1D) -> Pwl1D:
    """``net_part - target_part``: the network plus the mirrored (sign-flipped) target."""
    return pwl_sum([net_part, -target_part])


def sup_abs_on_interval(h: Pwl1D, a: float, b: float) -> tuple[float, float]:
    """Exact ``max |h|`` over ``[a, b]`` and a point attaining it.

    A piecewise-linear function attains its extreme absolute value at an
    endpoint or a breakpoint, so only those are examined.
    """
    if a > b:
        raise ValueError(f"empty interval: a={a} > b={b}")
    inner, _ = h.breakpoints_in(a, b)
    cand = np.concatenate(([a], inner, [b]))
    vals = np.abs(h(cand))
    i = int(np.argmax(vals))
    return float(vals[i]), float(cand[i])


def minimax_affine_3pts(t1, t2, t3, h1, h2, h3) -> float:
    """Smallest achievable ``max_j |h_j - l(t_j)|`` over affine ``l``.

    Two free parameters against three points: the optimum equioscillates,
    so it equals half the vertical gap between ``(t2, h2)`` and the chord
    through the outer points.
    """
    if not (t1 < t2 < t3):
        raise ValueError("points must satisfy t1 < t2 < t3")
    chord = (h1 * (t3 - t2) + h3 * (t2 - t1)) / (t3 - t1)
    return abs(h2 - chord) / 2.0


def minimax_affine_3pts_batch(t1, t2, t3, h1, h2, h3) -> np.ndarray:
    """Vectorized :func:`minimax_affine_3pts` without ordering checks."""
    chord = (h1 * (t3 - t2) + h3 * (t2 - t1)) / (t3 - t1)
    return np.abs(h2 - chord) / 2.0


def grid_max_abs(h: Pwl1D, a: float, b: float, n: int = 10_000) -> float:
    """Dense-grid estimate of ``max |h|`` on ``[a, b]``; a lower bound on the exact value."""
    return float(np.max(np.abs(h(np.linspace(a, b, n)))))


def as_pwl(points: Sequence[float], values: Sequence[float]) -> Pwl1D:
    """Interpolating Pwl1D through sorted ``points``, extended linearly at both ends."""
    x = np.asarray(points, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("need at least two strictly increasing points")
    s = np.diff(y) / np.diff(x)
    jumps = np.diff(s)
    return Pwl1D.build(x[1:-1], jumps, s[0], y[0] - s[0] * x[0])
