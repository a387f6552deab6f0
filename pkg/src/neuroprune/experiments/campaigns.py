"""The five experiment campaigns.

Every campaign is a pure function of its config.  Trial ``j`` uses seed
``config.seed + j`` and owns its own :class:`RngStream`, so results do not
depend on the worker count; trial outputs are concatenated in trial order.

CSV columns (each also carries ``config_hash``):

- separation: ``seed, n_h, arm, min_error, success``.  Neuron-arm rows use
  the hidden width searched; weight-arm rows report the first-layer width.
- chain: ``k, exactProb, mcProb, mcStderr``.
- bins: ``seed, family, step, brokenBins``.
- coupling: ``seed, step, bOrig, bCap, bBd, dominationOk, preconditionOk``.
- single-neuron: ``seed, theta, sinTheta, gridInfSup, capHit``.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..bins import BinPartition
from ..model import InputFamily, families, sample_network, sample_target, sample_unit_sphere
from ..processes import (ChainParams, bd_distribution, calibrate_chain_params, fit_log_slope,
                         sample_nondegenerate_target, simulate_bd_batch, simulate_coupled,
                         simulate_original)
from ..rng import RngStream
from ..search import DEFAULT_MAX_N, exhaustive_neuron_prune
from ..sphere import angle, cap_probability, grid_inf_sup
from ..weight_pruning import (build_weight_pruned_approx, family_error_two_layer,
                              sample_two_hidden_layer_net)
from .config import ConfigError, ExperimentConfig

# stream ids inside a trial seed
S_TARGET, S_NET, S_RAW, S_COUPLE, S_SPHERE, S_CALIB, S_CHAIN = range(7)
DKW_ALPHA = 0.01
MC_BLOCK = 1000


class InvariantViolation(RuntimeError):
    """Raised by the CLI when a campaign reports broken invariants."""


@dataclass
class CampaignResult:
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list
    seeds: tuple[int, ...] = ()
    summary: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _trial_seeds(cfg: ExperimentConfig) -> list[int]:
    return [(cfg.seed + j) % 2**64 for j in range(cfg.trials)]


def _constants(cfg: ExperimentConfig) -> dict:
    return {"c": cfg.level_c, "gamma": cfg.gamma, "cap_c": cfg.cap_c, "t_cap": cfg.cap}


def _chain_params(cfg: ExperimentConfig, k: int) -> tuple[ChainParams, dict]:
    """Use configured ``p, q`` or calibrate them from the neuron process."""
    if cfg.p is not None and cfg.q is not None:
        return ChainParams(cfg.p, cfg.q, cfg.cap), {"source": "config"}
    fam = InputFamily(1)
    part = BinPartition(cfg.epsilon, cfg.r)
    params, info = calibrate_chain_params(
        cfg.d, fam, part, cfg.level_c, cfg.cap, k, RngStream(cfg.seed, S_CALIB),
        n_trials=10_000,
        target_sampler=lambda g: sample_nondegenerate_target(cfg.d, fam, part, cfg.level_c, g))
    p = cfg.p if cfg.p is not None else params.p
    q = cfg.q if cfg.q is not None else min(params.q, 1.0 - p)
    info = dict(info, source="calibrated", p_calibrated=params.p, q_calibrated=params.q)
    return ChainParams(p, q, cfg.cap), info


# separation ------------------------------------------------------------------------

def _separation_trial(cfg: ExperimentConfig, sweep: tuple[int, ...], seed: int):
    h = cfg.hash()
    target = sample_target(cfg.d, RngStream(seed, S_TARGET))
    net = sample_network(cfg.d, max(sweep), RngStream(seed, S_NET))
    rows, bad = [], []
    tol = cfg.cap_c * cfg.epsilon
    for n_h in sweep:
        sub = type(net)(net.W[:n_h], net.alpha[:n_h])
        res = exhaustive_neuron_prune(sub, target, cfg.epsilon, cfg.r, cfg.cap_c, max_n=DEFAULT_MAX_N)
        rows.append((seed, n_h, "neuron", res.best_error, res.best_error <= tol, h))
    raw = sample_two_hidden_layer_net(cfg.d, cfg.pool, RngStream(seed, S_RAW))
    built = build_weight_pruned_approx(raw, target, cfg.epsilon, cfg.r)
    err = family_error_two_layer(built.net, target, cfg.r) if built.ok else math.inf
    if built.ok and err > built.error_bound + 1e-9:
        bad.append(f"seed {seed}: weight-arm error {err} exceeds certified bound {built.error_bound}")
    rows.append((seed, raw.width, "weight", err, err <= tol, h))
    return rows, bad


def run_separation(cfg: ExperimentConfig) -> CampaignResult:
    sweep = tuple(sorted(set(cfg.n_h_sweep))) if cfg.n_h_sweep else (cfg.n_h,)
    if max(sweep) > DEFAULT_MAX_N:
        raise ConfigError(f"n_h={max(sweep)} exceeds the exhaustive-search cap {DEFAULT_MAX_N}")
    seeds = _trial_seeds(cfg)
    out = _pmap(partial(_separation_trial, cfg, sweep), seeds, cfg.workers)
    rows = [r for rs, _ in out for r in rs]
    violations = [v for _, vs in out for v in vs]
    rates = {}
    for arm in ("neuron", "weight"):
        for n_h in sorted({r[1] for r in rows if r[2] == arm}):
            hits = [r[4] for r in rows if r[2] == arm and r[1] == n_h]
            rates[f"{arm}@{n_h}"] = float(np.mean(hits))
    summary = {"success_rate": rates, "sweep": list(sweep), "tolerance": cfg.cap_c * cfg.epsilon}
    return CampaignResult(cfg, ("seed", "n_h", "arm", "min_error", "success", "config_hash"), rows,
                          tuple(seeds), summary, {}, _constants(cfg), violations)


# chain -----------------------------------------------------------------------------

def _chain_block(params: ChainParams, k: int, seed: int, block_n) -> np.ndarray:
    block, n = block_n
    paths = simulate_bd_batch(params, k, n, RngStream(seed, S_CHAIN * 1_000_000 + block))
    return (paths == 0).sum(axis=0)


def run_chain(cfg: ExperimentConfig) -> CampaignResult:
    T = cfg.cap
    k_max = cfg.k if cfg.k is not None else 2 * T
    params, calib = _chain_params(cfg, cfg.n_h)
    dist = bd_distribution(params, k_max)
    exact = dist[:, 0]
    blocks = [(b, min(MC_BLOCK, cfg.trials - b * MC_BLOCK)) for b in range(math.ceil(cfg.trials / MC_BLOCK))]
    counts = _pmap(partial(_chain_block, params, k_max, cfg.seed), blocks, cfg.workers)
    mc = np.sum(counts, axis=0) / cfg.trials
    stderr = np.sqrt(mc * (1 - mc) / cfg.trials)
    h = cfg.hash()
    rows = [(k, exact[k], mc[k], stderr[k], h) for k in range(k_max + 1)]
    lo, hi = 5, (2 * T) // 3
    ks = np.arange(lo, min(hi, k_max) + 1)
    slope = fit_log_slope(ks, exact[ks]) if len(ks) >= 2 and np.all(exact[ks] > 0) else None
    conservation = float(np.max(np.abs(dist.sum(axis=1) - 1.0)))
    z = np.abs(mc - exact) / np.maximum(stderr, np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / cfg.trials))
    summary = {"p": params.p, "q": params.q, "t_cap": T, "slope_window": [lo, hi],
               "fitted_log_slope": slope, "conservation_max_error": conservation,
               "max_abs_z": float(np.max(np.where(np.isfinite(z), z, 0.0))),
               "drift_condition": params.drift_condition}
    violations = [] if conservation <= 1e-12 else [f"DP mass not conserved: {conservation}"]
    return CampaignResult(cfg, ("k", "exactProb", "mcProb", "mcStderr", "config_hash"), rows,
                          (cfg.seed,), summary, calib, _constants(cfg), violations)


# bins ------------------------------------------------------------------------------

def _bins_trial(cfg: ExperimentConfig, k: int, seed: int):
    h = cfg.hash()
    target = sample_target(cfg.d, RngStream(seed, S_TARGET))
    net = sample_network(cfg.d, cfg.n_h, RngStream(seed, S_NET))
    part = BinPartition(cfg.epsilon, cfg.r)
    rows, incs, multi, degenerate = [], [], 0, 0
    for fam in families(cfg.d):
        traj = simulate_original(net, None, fam, target, part, k, cfg.level_c)
        rows.extend((seed, fam.i, s, b, h) for s, b in enumerate(traj.states))
        incs.extend(int(x) for x in traj.increments())
        multi += traj.multi_event_steps
        degenerate += int(traj.states[0] == 0)
    return rows, incs, multi, degenerate


def run_bins(cfg: ExperimentConfig) -> CampaignResult:
    k = min(cfg.k if cfg.k is not None else cfg.n_h, cfg.n_h)
    seeds = _trial_seeds(cfg)
    out = _pmap(partial(_bins_trial, cfg, k), seeds, cfg.workers)
    rows = [r for o in out for r in o[0]]
    hist = Counter(i for o in out for i in o[1])
    multi = sum(o[2] for o in out)
    summary = {"increment_histogram": {str(k_): v for k_, v in sorted(hist.items())},
               "multi_event_steps": multi, "degenerate_families": sum(o[3] for o in out),
               "families_per_seed": len(families(cfg.d)), "steps": k}
    violations = []
    if any(abs(i) > 1 for i in hist) and multi == 0:
        violations.append("increment outside {-1, 0, 1} on an unflagged step")
    return CampaignResult(cfg, ("seed", "family", "step", "brokenBins", "config_hash"), rows,
                          tuple(seeds), summary, {}, _constants(cfg), violations)


# coupling --------------------------------------------------------------------------

def _coupling_trial(cfg: ExperimentConfig, params: ChainParams, k: int, seed: int):
    gen = RngStream(seed, S_COUPLE).generator()
    fam = InputFamily(1)
    part = BinPartition(cfg.epsilon, cfg.r)
    target = sample_nondegenerate_target(cfg.d, fam, part, cfg.level_c, gen)
    net = sample_network(cfg.d, k, gen)
    run = simulate_coupled(net, None, fam, target, part, k, cfg.cap, params, gen, cfg.level_c)
    return run.orig.states, run.cap.states, run.bd.states, run.precondition_ok


def _ecdf(samples: np.ndarray, xs: np.ndarray) -> np.ndarray:
    return (samples[:, None] <= xs[None, :]).mean(axis=0)


def run_coupling(cfg: ExperimentConfig) -> CampaignResult:
    k = cfg.k if cfg.k is not None else cfg.n_h
    params, calib = _chain_params(cfg, k)
    seeds = _trial_seeds(cfg)
    out = _pmap(partial(_coupling_trial, cfg, params, k), seeds, cfg.workers)
    orig = np.array([o[0] for o in out])
    cap = np.array([o[1] for o in out])
    bd = np.array([o[2] for o in out])
    pre = np.array([o[3] for o in out], dtype=bool)
    step_ok = (cap <= orig) & (bd <= cap)
    h = cfg.hash()
    rows = [(seed, s, orig[j, s], cap[j, s], bd[j, s], step_ok[j, s], pre[j], h)
            for j, seed in enumerate(seeds) for s in range(k + 1)]

    n = len(seeds)
    band = math.sqrt(math.log(2 / DKW_ALPHA) / (2 * n))
    xs = np.arange(0, cfg.cap + 1)
    exact = np.cumsum(bd_distribution(params, k), axis=1)
    gap_exact = gap_emp = gap_cap_orig = -math.inf
    for s in range(k + 1):
        f_orig, f_cap, f_bd = _ecdf(orig[:, s], xs), _ecdf(cap[:, s], xs), _ecdf(bd[:, s], xs)
        gap_cap_orig = max(gap_cap_orig, float(np.max(f_orig - f_cap)))
        gap_exact = max(gap_exact, float(np.max(f_cap - exact[s, xs])))
        gap_emp = max(gap_emp, float(np.max(f_cap - f_bd)))
    cap_runs = bool((cap <= orig).all(axis=1).all())
    bd_pre_ok = bool(step_ok[pre].all()) if pre.any() else True
    summary = {
        "runs": n, "steps": k, "p": params.p, "q": params.q,
        "cap_le_orig_fraction": float((cap <= orig).all(axis=1).mean()),
        "precondition_fraction": float(pre.mean()),
        "bd_le_cap_fraction_given_precondition":
            float((bd[pre] <= cap[pre]).all(axis=1).mean()) if pre.any() else None,
        "bd_le_cap_fraction_all": float((bd <= cap).all(axis=1).mean()),
        "dkw_alpha": DKW_ALPHA, "dkw_band": band,
        "max_cdf_gap_cap_over_bd_exact": gap_exact,
        "max_cdf_gap_cap_over_bd_empirical": gap_emp,
        "max_cdf_gap_orig_over_cap": gap_cap_orig,
        "cdf_dominance_exact_ok": gap_exact <= band,
        "cdf_dominance_empirical_ok": gap_emp <= 2 * band,
    }
    violations = []
    if not cap_runs:
        violations.append("capped process exceeded the original on some run")
    if not bd_pre_ok:
        violations.append("chain exceeded the capped process on a run passing the precondition")
    return CampaignResult(cfg, ("seed", "step", "bOrig", "bCap", "bBd", "dominationOk",
                                "preconditionOk", "config_hash"), rows,
                          tuple(seeds), summary, calib, _constants(cfg), violations)


# single neuron ---------------------------------------------------------------------

def _single_chunk(cfg: ExperimentConfig, w_star: np.ndarray, seeds):
    W = np.array([sample_unit_sphere(cfg.d, RngStream(s, S_SPHERE).generator()) for s in seeds])
    theta = angle(w_star, W)
    g = grid_inf_sup(theta)
    sin = np.sin(theta)
    hit = theta <= 2 * cfg.epsilon
    return [(s, theta[i], sin[i], g[i], hit[i]) for i, s in enumerate(seeds)]


def run_single_neuron(cfg: ExperimentConfig) -> CampaignResult:
    w_star = sample_target(cfg.d, RngStream(cfg.seed, S_TARGET)).w_star
    seeds = _trial_seeds(cfg)
    chunks = [seeds[i:i + 5000] for i in range(0, len(seeds), 5000)]
    out = _pmap(partial(_single_chunk, cfg, w_star), chunks, cfg.workers)
    h = cfg.hash()
    rows = [r + (h,) for rs in out for r in rs]
    n = len(rows)
    hits = np.array([r[4] for r in rows], dtype=float)
    p_exact = cap_probability(cfg.d, 2 * cfg.epsilon)
    sigma = math.sqrt(p_exact * (1 - p_exact) / n)
    p_emp = float(hits.mean())
    slack = min(r[3] - r[2] for r in rows)
    summary = {"n": n, "p_empirical": p_emp, "p_exact": p_exact, "sigma": sigma,
               "z": (p_emp - p_exact) / sigma if sigma > 0 else None,
               "within_3_sigma": abs(p_emp - p_exact) <= 3 * sigma,
               "min_gridInfSup_minus_sinTheta": slack}
    violations = [] if slack >= -1e-9 else [f"gridInfSup below sin(theta) by {-slack}"]
    return CampaignResult(cfg, ("seed", "theta", "sinTheta", "gridInfSup", "capHit", "config_hash"),
                          rows, tuple(seeds), summary, {}, _constants(cfg), violations)


CAMPAIGNS = {
    "separation": run_separation,
    "chain": run_chain,
    "bins": run_bins,
    "coupling": run_coupling,
    "single-neuron": run_single_neuron,
}


def run_campaign(cfg: ExperimentConfig) -> CampaignResult:
    return CAMPAIGNS[cfg.name](cfg)
