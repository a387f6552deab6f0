"""Bin partitions of the family interval and the broken-bin predicate.

A bin is *broken* for ``h`` when some three points ``t1 < t2 < t3`` inside
it cannot be fit by any affine function to better than ``c * eps``.  Adding
an affine function to ``h`` never changes that, so a bin's status depends
only on the breakpoints strictly inside it.  Every routine here works with
that local part (``sum_j J_j relu(t - b_j)`` over interior breakpoints),
which also means a new breakpoint can only change the status of the bin it
lands in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .pwl import MERGE_TOL, Pwl1D, minimax_affine_3pts_batch


@dataclass(frozen=True)
class BinPartition:
    """``I_R = [-sqrt(r^2-1), sqrt(r^2-1)]`` cut into width-``epsilon`` bins.

    All bins are half-open ``[lo, hi)`` except the last, which is closed and
    may be shorter than ``epsilon``.
    """

    epsilon: float
    r: float
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.r > 1:
            raise ValueError(f"radius must exceed 1, got {self.r}")
        half = math.sqrt(self.r * self.r - 1.0)
        n = max(1, math.ceil(2 * half / self.epsilon - 1e-9))
        edges = -half + self.epsilon * np.arange(n + 1, dtype=float)
        edges[-1] = half
        edges.flags.writeable = False
        object.__setattr__(self, "edges", edges)

    @property
    def n_bins(self) -> int:
        return self.edges.size - 1

    @property
    def left(self) -> float:
        return float(self.edges[0])

    @property
    def right(self) -> float:
        return float(self.edges[-1])

    def bin(self, k: int) -> tuple[float, float]:
        return float(self.edges[k]), float(self.edges[k + 1])

    def bins(self) -> list[tuple[float, float]]:
        return [self.bin(k) for k in range(self.n_bins)]

    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def bin_index(self, t):
        """Bin containing ``t``; -1 outside ``I_R``."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.edges, t, side="right") - 1
        k = np.where(t == self.right, self.n_bins - 1, k)
        inside = (t >= self.left) & (t <= self.right)
        out = np.where(inside, k, -1)
        return out if out.ndim else int(out)


@dataclass(frozen=True)
class Witness:
    t1: float
    t2: float
    t3: float
    value: float


@dataclass
class BrokenBinReport:
    broken: np.ndarray
    witnesses: dict[int, Witness]
    level: float

    @property
    def count(self) -> int:
        return int(self.broken.sum())

    def broken_bins(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.broken)]


# local minimax ------------------------------------------------------------------

def _local_values(points: np.ndarray, bps: np.ndarray, jumps: np.ndarray) -> np.ndarray:
    """``sum_j jumps[..., j] relu(points[..., p] - bps[..., j])`` -> shape (..., P)."""
    ramps = np.maximum(points[..., :, None] - bps[..., None, :], 0.0)
    return np.einsum("...pj,...j->...p", ramps, jumps)


def local_minimax_batch(lo: float, hi: float, bps: np.ndarray, jumps: np.ndarray) -> np.ndarray:
    """Max three-point minimax inside ``[lo, hi]`` for a batch of breakpoint sets.

    ``bps`` and ``jumps`` have shape ``(M, m)``; every breakpoint must lie in
    ``(lo, hi)``.  Zero jumps act as padding.  Triples range over the bin
    endpoints and the breakpoints with the middle point on a breakpoint,
    which contains an optimal triple for piecewise-linear functions.
    """
    bps = np.atleast_2d(np.asarray(bps, dtype=float))
    jumps = np.atleast_2d(np.asarray(jumps, dtype=float))
    M, m = bps.shape
    if m == 0:
        return np.zeros(M)
    order = np.argsort(bps, axis=1)
    bps = np.take_along_axis(bps, order, axis=1)
    jumps = np.take_along_axis(jumps, order, axis=1)
    pts = np.concatenate([np.full((M, 1), lo), bps, np.full((M, 1), hi)], axis=1)
    vals = _local_values(pts, bps, jumps)
    best = np.zeros(M)
    P = m + 2
    for j in range(1, P - 1):
        for i in range(j):
            for l in range(j + 1, P):
                dev = minimax_affine_3pts_batch(pts[:, i], pts[:, j], pts[:, l],
                                                vals[:, i], vals[:, j], vals[:, l])
                np.maximum(best, dev, out=best)
    return best


def single_breakpoint_minimax(lo, hi, t, jump):
    """Closed form of :func:`local_minimax_batch` for one breakpoint per bin."""
    t = np.asarray(t, dtype=float)
    return np.abs(jump) * (t - lo) * (hi - t) / (2.0 * (hi - lo))


def is_bin_broken(h: Pwl1D, bin: tuple[float, float], c: float, epsilon: float):
    """Whether ``bin`` is broken for ``h`` at level ``c * epsilon``.

    Returns ``(broken, witness)``; ``witness`` is the maximizing triple, or
    ``None`` when ``h`` is affine on the bin.  Candidate points are the bin
    endpoints, the interior breakpoints and the midpoints between
    consecutive candidates.
    """
    lo, hi = bin
    if c <= 0:
        raise ValueError("c must be positive")
    if hi - lo > epsilon * (1 + 1e-9):
        raise ValueError(f"bin width {hi - lo} exceeds epsilon {epsilon}")
    bps, jumps = h.breakpoints_in(lo, hi)
    if bps.size == 0:
        return False, None
    base = np.concatenate(([lo], bps, [hi]))
    mids = 0.5 * (base[:-1] + base[1:])
    pts = np.sort(np.concatenate((base, mids)))
    vals = _local_values(pts, bps, jumps)
    idx = np.array(list(combinations(range(pts.size), 3)))
    dev = minimax_affine_3pts_batch(pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]],
                                    vals[idx[:, 0]], vals[idx[:, 1]], vals[idx[:, 2]])
    b = int(np.argmax(dev))
    i, j, l = idx[b]
    w = Witness(float(pts[i]), float(pts[j]), float(pts[l]), float(dev[b]))
    return bool(w.value >= c * epsilon), w


def broken_bin_count(h: Pwl1D, part: BinPartition, c: float):
    """Number of broken bins of ``part`` for ``h`` and the per-bin report."""
    flags = np.zeros(part.n_bins, dtype=bool)
    witnesses: dict[int, Witness] = {}
    inside = (h.breakpoints > part.left) & (h.breakpoints < part.right)
    for k in np.unique(part.bin_index(h.breakpoints[inside])):
        broken, w = is_bin_broken(h, part.bin(int(k)), c, part.epsilon)
        if broken:
            flags[k] = True
            witnesses[int(k)] = w
    report = BrokenBinReport(flags, witnesses, c * part.epsilon)
    return report.count, report


# incremental tracker ----------------------------------------------------------------

class BinTracker:
    """Broken-bin state of a residual, updated one breakpoint at a time.

    Holds each bin's interior breakpoints and its status.  ``add`` touches
    only the bin receiving the breakpoint.
    """

    def __init__(self, part: BinPartition, c: float):
        self.part = part
        self.c = float(c)
        self.level = self.c * part.epsilon
        self.content: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.status = np.zeros(part.n_bins, dtype=bool)

    @classmethod
    def from_pwl(cls, h: Pwl1D, part: BinPartition, c: float) -> "BinTracker":
        tr = cls(part, c)
        for b, j in zip(h.breakpoints, h.jumps):
            tr.add(b, j)
        return tr

    def copy(self) -> "BinTracker":
        tr = BinTracker(self.part, self.c)
        tr.content = dict(self.content)
        tr.status = self.status.copy()
        return tr

    @property
    def count(self) -> int:
        return int(self.status.sum())

    def locate(self, bp: float) -> int:
        """Bin whose interior holds ``bp``; -1 if none (outside, or on an edge)."""
        if not np.isfinite(bp):
            return -1
        k = self.part.bin_index(bp)
        if k < 0:
            return -1
        lo, hi = self.part.bin(k)
        return k if lo < bp < hi else -1

    def merged_content(self, k: int, bp: float, jump: float):
        bps, jumps = self.content.get(k, (np.empty(0), np.empty(0)))
        near = np.flatnonzero(np.abs(bps - bp) <= MERGE_TOL)
        if near.size:
            n = near[0]
            jumps = jumps.copy()
            total = jumps[n] + jump
            if abs(total) <= 8 * np.finfo(float).eps * (abs(jumps[n]) + abs(jump)):
                return np.delete(bps, n), np.delete(jumps, n)
            jumps[n] = total
            return bps, jumps
        return np.append(bps, bp), np.append(jumps, jump)

    def bin_status(self, k: int, bps: np.ndarray, jumps: np.ndarray) -> bool:
        if bps.size == 0:
            return False
        lo, hi = self.part.bin(k)
        return bool(local_minimax_batch(lo, hi, bps[None, :], jumps[None, :])[0] >= self.level)

    def add(self, bp: float, jump: float) -> int:
        """Insert one breakpoint; returns the change in the broken-bin count."""
        k = self.locate(bp)
        if k < 0 or jump == 0:
            return 0
        bps, jumps = self.merged_content(k, bp, jump)
        if bps.size:
            self.content[k] = (bps, jumps)
        else:
            self.content.pop(k, None)
        new = self.bin_status(k, bps, jumps)
        delta = int(new) - int(self.status[k])
        self.status[k] = new
        return delta
