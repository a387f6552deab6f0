"""Approximate random subset sum by meet-in-the-middle."""

from __future__ import annotations

import numpy as np

MITM_MAX = 40


class SubsetSumNotFound(LookupError):
    """No subset within tolerance.

    ``exhaustive`` is True when the search covered every subset (so none
    exists) and False when only the search budget ran out.
    """

    def __init__(self, z, epsilon, best_error, exhaustive):
        super().__init__(f"no subset sums to {z} within {epsilon} (best error {best_error:.3g}, "
                         f"{'exhaustive' if exhaustive else 'budget exhausted'})")
        self.z, self.epsilon, self.best_error, self.exhaustive = z, epsilon, best_error, exhaustive


def _all_sums(x: np.ndarray) -> np.ndarray:
    """Sums of all subsets of ``x``; entry ``m`` uses the elements picked by the bits of ``m``."""
    sums = np.zeros(1)
    for v in x:
        sums = np.concatenate([sums, sums + v])
    return sums


def _bits(m: int, offset: int) -> list[int]:
    return [offset + j for j in range(int(m).bit_length()) if m >> j & 1]


def closest_subset(samples, z: float) -> tuple[tuple[int, ...], float]:
    """Exact closest subset sum to ``z`` for at most ``MITM_MAX`` samples."""
    x = np.asarray(samples, dtype=float)
    if x.size > MITM_MAX:
        raise ValueError(f"meet-in-the-middle handles at most {MITM_MAX} samples")
    h = x.size // 2
    left, right = _all_sums(x[:h]), _all_sums(x[h:])
    order = np.argsort(right, kind="stable")
    rs = right[order]
    need = z - left
    pos = np.searchsorted(rs, need)
    cand = np.stack([np.clip(pos - 1, 0, rs.size - 1), np.clip(pos, 0, rs.size - 1)], axis=1)
    err = np.abs(need[:, None] - rs[cand])
    flat = int(np.argmin(err))
    li, side = divmod(flat, 2)
    ri = int(order[cand[li, side]])
    idx = tuple(_bits(li, 0) + _bits(ri, h))
    return idx, float(abs(z - x[list(idx)].sum()))


def rss_subset(samples, z: float, epsilon: float) -> tuple[int, ...]:
    """Indices of a subset whose sum is within ``epsilon`` of ``z``.

    Exact for up to 40 samples.  Beyond that the first 40 are solved exactly
    and the rest are added greedily (largest magnitude first) while they
    shrink the residual.  Raises :class:`SubsetSumNotFound` otherwise.
    """
    x = np.asarray(samples, dtype=float)
    idx, err = closest_subset(x[:MITM_MAX], z)
    if err <= epsilon:
        return idx
    if x.size <= MITM_MAX:
        raise SubsetSumNotFound(z, epsilon, err, exhaustive=True)
    chosen = list(idx)
    resid = z - x[chosen].sum()
    rest = MITM_MAX + np.argsort(-np.abs(x[MITM_MAX:]), kind="stable")
    for j in rest:
        if abs(resid - x[j]) < abs(resid):
            chosen.append(int(j))
            resid -= x[j]
            if abs(resid) <= epsilon:
                return tuple(sorted(chosen))
    raise SubsetSumNotFound(z, epsilon, abs(resid), exhaustive=False)
