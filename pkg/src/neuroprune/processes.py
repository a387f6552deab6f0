"""Broken-bin processes under sequential neuron selection.

Three processes are tracked per input family:

* the original process: broken-bin count of the residual
  ``(first s neurons) - target`` along the family,
* the capped process: the same increments with births suppressed at ``T``,
* the ``(q, p, T)`` birth-death chain, homogeneous in time.

The coupling in :func:`simulate_coupled` draws one uniform per step inside
the region of the capped process's actual event (birth low, death high) and
reads the chain's move off the same uniform.  When the chain's birth
probability is below the capped one and its death probability above, the
chain sits below the capped process on every path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .bins import BinPartition, BinTracker, local_minimax_batch, single_breakpoint_minimax
from .model import (InputFamily, TargetNeuron, TwoLayerNet, family_breakpoints, family_jumps,
                    restrict_target, sample_network)
from .rng import as_generator

DEFAULT_GAMMA = 1.0
DEFAULT_C = DEFAULT_GAMMA / 16
CAP_CONST = 4.0


def default_t_cap(r: float, epsilon: float, const: float = CAP_CONST) -> int:
    """``T = R / (const * eps)``, rounded to an integer >= 1."""
    return max(1, int(round(r / (const * epsilon))))


@dataclass(frozen=True)
class ChainParams:
    p: float
    q: float
    t_cap: int

    def __post_init__(self):
        if not (0 <= self.p <= 1 and 0 <= self.q <= 1):
            raise ValueError(f"p and q must lie in [0, 1], got p={self.p}, q={self.q}")
        if self.p + self.q > 1 + 1e-15:
            raise ValueError(f"p + q must not exceed 1, got {self.p + self.q}")
        if int(self.t_cap) < 1:
            raise ValueError(f"t_cap must be >= 1, got {self.t_cap}")
        object.__setattr__(self, "t_cap", int(self.t_cap))

    @property
    def drift_condition(self) -> bool:
        """``q < min(1/3, p/2)``: births clearly outpace deaths."""
        return self.q < min(1 / 3, self.p / 2)


@dataclass
class Trajectory:
    states: np.ndarray
    right_moves: int
    left_moves: int
    kind: str = "bd"
    multi_event_steps: int = 0

    @property
    def k(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> int:
        return int(self.states[-1])

    def increments(self) -> np.ndarray:
        return np.diff(self.states)


def _trajectory(states, kind, multi=0) -> Trajectory:
    states = np.asarray(states, dtype=np.int64)
    inc = np.diff(states)
    return Trajectory(states, int((inc > 0).sum()), int((inc < 0).sum()), kind, multi)


# original and capped processes ---------------------------------------------------

def _mirror_tracker(target: TargetNeuron, fam: InputFamily, part: BinPartition, c: float) -> BinTracker:
    return BinTracker.from_pwl(-restrict_target(target, fam), part, c)


def _ordered_arrivals(net: TwoLayerNet, order, fam: InputFamily, k: int):
    order = np.arange(net.n_h) if order is None else np.asarray(order, dtype=np.int64)
    if k > order.size:
        raise ValueError(f"k={k} exceeds the {order.size} available neurons")
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(set(order[:k].tolist())) != k:
        raise ValueError("order must not repeat neurons")
    idx = order[:k]
    return family_breakpoints(net, fam)[idx], family_jumps(net, fam)[idx]


def original_counts(net, order, fam, target, part, k, c=DEFAULT_C):
    """Broken-bin counts ``B_0..B_k`` and the raw per-step changes."""
    tracker = _mirror_tracker(target, fam, part, c)
    bps, jumps = _ordered_arrivals(net, order, fam, k)
    states = [tracker.count]
    for bp, jump in zip(bps, jumps):
        tracker.add(bp, jump)
        states.append(tracker.count)
    return np.array(states, dtype=np.int64)


def simulate_original(net: TwoLayerNet, order, fam: InputFamily, target: TargetNeuron,
                      part: BinPartition, k: int, c: float = DEFAULT_C) -> Trajectory:
    """``B_s`` = broken bins of (first ``s`` neurons in ``order``) minus the target.

    ``B_0`` is 1 when the mirrored target breaks its own bin and 0 otherwise
    (a degenerate family).  Steps whose count changes by more than one are
    counted in ``multi_event_steps``.
    """
    states = original_counts(net, order, fam, target, part, k, c)
    multi = int((np.abs(np.diff(states)) > 1).sum())
    return _trajectory(states, "orig", multi)


def capped_from_original(orig_states, t_cap: int) -> np.ndarray:
    """Apply the sign of each original increment, suppressing +1 at ``t_cap`` and -1 at 0."""
    orig_states = np.asarray(orig_states)
    cap = [min(int(orig_states[0]), t_cap)]
    for delta in np.diff(orig_states):
        b = cap[-1]
        if delta > 0 and b < t_cap:
            b += 1
        elif delta < 0 and b > 0:
            b -= 1
        cap.append(b)
    return np.array(cap, dtype=np.int64)


def simulate_capped(net, order, fam, target, part, k, c=DEFAULT_C, *, t_cap: int) -> Trajectory:
    if t_cap < 1:
        raise ValueError("t_cap must be >= 1")
    orig = original_counts(net, order, fam, target, part, k, c)
    multi = int((np.abs(np.diff(orig)) > 1).sum())
    return _trajectory(capped_from_original(orig, t_cap), "cap", multi)


# birth-death chain ---------------------------------------------------------------

def _chain_step(b: int, u: float, params: ChainParams) -> int:
    if b < params.t_cap and u < params.p:
        return b + 1
    if b > 0 and u >= 1.0 - params.q:
        return b - 1
    return b


def simulate_bd(params: ChainParams, k: int, rng) -> Trajectory:
    """One path of the ``(q, p, T)`` chain from ``B_0 = 1``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    gen = as_generator(rng)
    states = [min(1, params.t_cap)]
    for u in gen.random(k):
        states.append(_chain_step(states[-1], u, params))
    return _trajectory(states, "bd")


def simulate_bd_batch(params: ChainParams, k: int, n: int, rng) -> np.ndarray:
    """``n`` independent chains; returns the ``(n, k+1)`` state matrix."""
    gen = as_generator(rng)
    out = np.empty((n, k + 1), dtype=np.int64)
    b = np.ones(n, dtype=np.int64)
    out[:, 0] = b
    for s in range(k):
        u = gen.random(n)
        up = (b < params.t_cap) & (u < params.p)
        down = ~up & (b > 0) & (u >= 1.0 - params.q)
        b = b + up - down
        out[:, s + 1] = b
    return out


def bd_distribution(params: ChainParams, k: int) -> np.ndarray:
    """State distribution after ``0..k`` steps, shape ``(k+1, T+1)``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    T = params.t_cap
    up = np.full(T + 1, params.p)
    up[T] = 0.0
    down = np.full(T + 1, params.q)
    down[0] = 0.0
    stay = 1.0 - up - down
    dist = np.zeros((k + 1, T + 1))
    dist[0, 1] = 1.0
    for s in range(k):
        cur = dist[s]
        nxt = cur * stay
        nxt[1:] += cur[:-1] * up[:-1]
        nxt[:-1] += cur[1:] * down[1:]
        dist[s + 1] = nxt
    return dist


def bd_exact_hit0(params: ChainParams, k: int) -> float:
    """``Pr(B_k = 0)`` by forward iteration of the transition operator; O(k T)."""
    return float(bd_distribution(params, k)[k, 0])


def fit_log_slope(ks, probs) -> float:
    """Least-squares slope of ``log probs`` against ``ks``."""
    ks = np.asarray(ks, dtype=float)
    logp = np.log(np.asarray(probs, dtype=float))
    return float(np.polyfit(ks, logp, 1)[0])


# transition probabilities ----------------------------------------------------------

def _cauchy_cdf(t):
    return 0.5 + np.arctan(t) / np.pi


def empty_bin_break_probability(lo: float, hi: float, level: float) -> float:
    """Probability that one fresh Gaussian neuron breaks the empty bin ``[lo, hi]``.

    The family breakpoint ``t`` of a fresh neuron is standard Cauchy and its
    jump satisfies ``|J| sqrt(1 + t^2) ~ Exp(1)`` independently of ``t``.
    A lone breakpoint breaks the bin iff
    ``|J| (t - lo)(hi - t) / (2 (hi - lo)) >= level``.
    """
    w = hi - lo

    def integrand(t):
        g = (t - lo) * (hi - t) / (2.0 * w)
        if g <= 0:
            return 0.0
        return math.exp(-level * math.sqrt(1.0 + t * t) / g) / (math.pi * (1.0 + t * t))

    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-10, limit=200)
    return val


@lru_cache(maxsize=64)
def _empty_bin_table(epsilon: float, r: float, c: float) -> np.ndarray:
    part = BinPartition(epsilon, r)
    level = c * epsilon
    table = np.array([empty_bin_break_probability(lo, hi, level) for lo, hi in part.bins()])
    table.flags.writeable = False
    return table


def empty_bin_table(part: BinPartition, c: float) -> np.ndarray:
    return _empty_bin_table(float(part.epsilon), float(part.r), float(c))


def classify_arrivals(tracker: BinTracker, bps, jumps) -> np.ndarray:
    """Effect of adding each candidate breakpoint alone to the tracked state.

    Returns +1 (breaks an unbroken bin), -1 (unbreaks a broken bin) or 0.
    """
    bps = np.asarray(bps, dtype=float)
    jumps = np.asarray(jumps, dtype=float)
    part = tracker.part
    out = np.zeros(bps.size, dtype=np.int64)
    finite = np.isfinite(bps) & (jumps != 0)
    k = np.full(bps.size, -1, dtype=np.int64)
    k[finite] = part.bin_index(bps[finite])
    valid = k >= 0
    lo = np.where(valid, part.edges[np.maximum(k, 0)], 0.0)
    hi = np.where(valid, part.edges[np.maximum(k, 0) + 1], 0.0)
    valid &= (bps > lo) & (bps < hi)
    empty = valid.copy()
    for kk in tracker.content:
        empty &= k != kk
    idx = np.flatnonzero(empty)
    if idx.size:
        broken = single_breakpoint_minimax(lo[idx], hi[idx], bps[idx], jumps[idx]) >= tracker.level
        out[idx] = broken.astype(np.int64)
    for kk, (cb, cj) in tracker.content.items():
        idx = np.flatnonzero(valid & (k == kk))
        if idx.size:
            out[idx] = _content_flips(tracker, kk, cb, cj, bps[idx], jumps[idx])
    return out


def _content_flips(tracker, kk, cb, cj, new_b, new_j) -> np.ndarray:
    lo, hi = tracker.part.bin(kk)
    n = new_b.size
    B = np.concatenate([np.broadcast_to(cb, (n, cb.size)), new_b[:, None]], axis=1)
    J = np.concatenate([np.broadcast_to(cj, (n, cj.size)), new_j[:, None]], axis=1)
    new_status = local_minimax_batch(lo, hi, B, J) >= tracker.level
    old = bool(tracker.status[kk])
    return new_status.astype(np.int64) - int(old)


def default_neuron_sampler(d: int):
    def sampler(gen, n):
        return sample_network(d, n, gen)
    return sampler


def estimate_transition_probs(sampler, fam: InputFamily, part: BinPartition, c: float,
                              state, n_trials: int, rng) -> tuple[float, float]:
    """Monte Carlo birth and death probabilities of one fresh neuron from ``state``.

    ``sampler(gen, n)`` returns a TwoLayerNet of ``n`` fresh neurons;
    ``state`` is a :class:`BinTracker` or a residual Pwl1D.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    tracker = state if isinstance(state, BinTracker) else BinTracker.from_pwl(state, part, c)
    fresh = sampler(as_generator(rng), n_trials)
    out = classify_arrivals(tracker, family_breakpoints(fresh, fam), family_jumps(fresh, fam))
    return float(np.mean(out == 1)), float(np.mean(out == -1))


class RateBook:
    """Per-bin flip probabilities of a tracked state, refreshed bin by bin.

    Empty bins use the quadrature table; bins holding breakpoints use
    ``n_samples`` conditional draws (breakpoint given the bin, then the jump)
    fixed at construction.
    """

    def __init__(self, tracker: BinTracker, gen: np.random.Generator, n_samples: int = 512):
        self.tracker = tracker
        self.base = empty_bin_table(tracker.part, tracker.c)
        self.phi = self.base.copy()
        self.u = gen.random(n_samples)
        self.e = gen.exponential(size=n_samples)
        self.sign = np.where(gen.random(n_samples) < 0.5, -1.0, 1.0)
        for k in list(tracker.content):
            self.refresh(k)

    def refresh(self, k: int):
        if k < 0:
            return
        tr = self.tracker
        if k not in tr.content:
            self.phi[k] = self.base[k]
            return
        lo, hi = tr.part.bin(k)
        f_lo, f_hi = _cauchy_cdf(lo), _cauchy_cdf(hi)
        t = np.tan(np.pi * (f_lo + self.u * (f_hi - f_lo) - 0.5))
        t = np.clip(t, np.nextafter(lo, hi), np.nextafter(hi, lo))
        jumps = self.sign * self.e / np.sqrt(1.0 + t * t)
        cb, cj = tr.content[k]
        flips = _content_flips(tr, k, cb, cj, t, jumps) != 0
        self.phi[k] = (f_hi - f_lo) * flips.mean()

    def birth(self) -> float:
        return float(self.phi[~self.tracker.status].sum())

    def death(self) -> float:
        return float(self.phi[self.tracker.status].sum())


# coupling --------------------------------------------------------------------------

@dataclass
class CoupledRun:
    orig: Trajectory
    cap: Trajectory
    bd: Trajectory
    cap_le_orig: np.ndarray
    bd_le_cap: np.ndarray
    precondition_ok: bool
    birth_rates: np.ndarray = field(repr=False)
    death_rates: np.ndarray = field(repr=False)

    @property
    def domination_ok(self) -> bool:
        return bool(self.cap_le_orig.all() and self.bd_le_cap.all())


def simulate_coupled(net: TwoLayerNet, order, fam: InputFamily, target: TargetNeuron,
                     part: BinPartition, k: int, t_cap: int, params: ChainParams, rng,
                     c: float = DEFAULT_C, n_rate_samples: int = 512) -> CoupledRun:
    """Drive the original, capped and chain processes from one neuron stream.

    At each step the capped process's conditional birth/death probabilities
    are estimated from the current state (:class:`RateBook`).  A uniform
    ``U`` is drawn inside the region of the event that actually happened
    (birth ``[0, beta)``, none, death ``[1 - delta, 1]``); the chain births
    when ``U < p`` and dies when ``U >= 1 - q``.  ``precondition_ok`` records
    whether ``p <= beta`` and ``q >= delta`` held at every step where the
    chain and the capped process were level; it is false from the start when
    the family is degenerate (``B_0 = 0`` while the chain starts at 1).
    """
    if params.t_cap != t_cap:
        raise ValueError("params.t_cap must equal t_cap")
    gen = as_generator(rng)
    tracker = _mirror_tracker(target, fam, part, c)
    book = RateBook(tracker, gen, n_rate_samples)
    bps, jumps = _ordered_arrivals(net, order, fam, k)
    uniforms = gen.random(k)

    orig = [tracker.count]
    cap = [min(orig[0], t_cap)]
    bd = [min(1, t_cap)]
    births, deaths = [], []
    ok = bd[0] <= cap[0]
    for s in range(k):
        beta, delta = book.birth(), book.death()
        births.append(beta)
        deaths.append(delta)
        b_cap, b_bd = cap[-1], bd[-1]
        beta_c = beta if b_cap < t_cap else 0.0
        delta_c = delta if b_cap > 0 else 0.0
        p_eff = params.p if b_bd < t_cap else 0.0
        q_eff = params.q if b_bd > 0 else 0.0
        if b_bd == b_cap and (p_eff > beta_c or q_eff < delta_c):
            ok = False
        if p_eff + delta_c > 1.0:
            ok = False

        k_bin = tracker.locate(bps[s]) if jumps[s] != 0 else -1
        d_orig = tracker.add(bps[s], jumps[s])
        book.refresh(k_bin)
        orig.append(tracker.count)

        v = uniforms[s]
        if d_orig > 0 and b_cap < t_cap:
            cap.append(b_cap + 1)
            u = v * beta_c
        elif d_orig < 0 and b_cap > 0:
            cap.append(b_cap - 1)
            u = 1.0 - v * delta_c
        else:
            cap.append(b_cap)
            u = beta_c + v * max(0.0, 1.0 - beta_c - delta_c)
        if u < p_eff:
            bd.append(b_bd + 1)
        elif u >= 1.0 - q_eff:
            bd.append(b_bd - 1)
        else:
            bd.append(b_bd)

    orig_a, cap_a, bd_a = (np.array(x, dtype=np.int64) for x in (orig, cap, bd))
    multi = int((np.abs(np.diff(orig_a)) > 1).sum())
    return CoupledRun(
        orig=_trajectory(orig_a, "orig", multi),
        cap=_trajectory(cap_a, "cap", multi),
        bd=_trajectory(bd_a, "bd"),
        cap_le_orig=cap_a <= orig_a,
        bd_le_cap=bd_a <= cap_a,
        precondition_ok=ok,
        birth_rates=np.array(births),
        death_rates=np.array(deaths),
    )


def sample_nondegenerate_target(d: int, fam: InputFamily, part: BinPartition, c: float, rng,
                                max_tries: int = 100_000) -> TargetNeuron:
    """Uniform target on the sphere conditioned on its mirrored family breaking one bin."""
    from .model import sample_target

    gen = as_generator(rng)
    for _ in range(max_tries):
        target = sample_target(d, gen)
        if _mirror_tracker(target, fam, part, c).count == 1:
            return target
    raise RuntimeError(f"no non-degenerate target for family {fam.i} in {max_tries} draws")


def calibrate_chain_params(d: int, fam: InputFamily, part: BinPartition, c: float, t_cap: int,
                           k: int, rng, *, n_trials: int = 10_000, pilot_runs: int = 8,
                           p_margin: float = 0.85, q_margin: float = 1.5, q_floor: float = 0.01,
                           target_sampler=None):
    """Pick ``(p, q)`` from birth/death estimates at states visited by pilot runs.

    ``p`` is ``p_margin`` times the smallest estimated birth probability over
    pilot states below the cap; ``q`` is the larger of ``q_floor`` and
    ``q_margin`` times the largest estimated death probability.  Returns
    ``(ChainParams, info)``.
    """
    gen = as_generator(rng)
    sampler = default_neuron_sampler(d)
    p_hats, q_hats = [], []
    for _ in range(pilot_runs):
        target = target_sampler(gen) if target_sampler else None
        if target is None:
            from .model import sample_target
            target = sample_target(d, gen)
        net = sample_network(d, max(k, 1), gen)
        tracker = _mirror_tracker(target, fam, part, c)
        bps, jumps = _ordered_arrivals(net, None, fam, k)
        states = [tracker.copy()]
        for bp, jump in zip(bps, jumps):
            tracker.add(bp, jump)
            states.append(tracker.copy())
        for st in states:
            ph, qh = estimate_transition_probs(sampler, fam, part, c, st, n_trials, gen)
            if st.count < t_cap:
                p_hats.append(ph)
            q_hats.append(qh)
    p_floor = min(p_hats) if p_hats else 0.0
    q_ceiling = max(q_hats) if q_hats else 0.0
    p = p_margin * p_floor
    q = min(max(q_margin * q_ceiling, q_floor), 1.0 - p)
    info = {"p_hat_floor": p_floor, "q_hat_ceiling": q_ceiling, "pilot_states": len(q_hats),
            "n_trials_per_state": n_trials}
    return ChainParams(p, q, t_cap), info
