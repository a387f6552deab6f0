"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the pytest terminal
summary, or directly with ``pytest -s``).
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy import optimize, stats

from neuroprune import experiments as ex
from neuroprune.bins import BinPartition, is_bin_broken
from neuroprune.experiments.io import write_csv
from neuroprune.model import InputFamily, family_breakpoints, sample_network
from neuroprune.processes import ChainParams, bd_distribution, bd_exact_hit0, fit_log_slope, simulate_bd_batch
from neuroprune.pwl import Pwl1D, minimax_affine_3pts, sup_abs_on_interval
from neuroprune.rng import RngStream

C_LEVEL = 1 / 16


def lp_minimax(t, h):
    """min_{alpha, beta} max_j |h_j - alpha t_j - beta| as a linear program."""
    A, b = [], []
    for tj, hj in zip(t, h):
        A.append([tj, 1.0, -1.0]); b.append(hj)
        A.append([-tj, -1.0, -1.0]); b.append(-hj)
    res = optimize.linprog([0, 0, 1], A_ub=A, b_ub=b, bounds=[(None, None)] * 3, method="highs",
                           options={"primal_feasibility_tolerance": 1e-10,
                                    "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return res.fun


def test_1_minimax_oracle(record):
    gen = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        t = np.sort(gen.uniform(-3, 3, 3))
        h = gen.normal(size=3)
        worst = max(worst, abs(minimax_affine_3pts(*t, *h) - lp_minimax(t, h)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5
    record(1, "3-point minimax vs LP on 1000 triples", ok, f"max |diff| = {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_2_breakpoint_necessary(record):
    gen = np.random.default_rng(2)
    worst = math.inf
    for n in range(1000):
        a = gen.uniform(0.25, 4)
        ts = gen.uniform(-2, 2)
        delta = gen.uniform(0.01, 1)
        probes = np.array([ts - delta, ts, ts + delta])
        f = np.maximum(a * (probes - ts), 0)
        if n % 2:
            slope, icpt = gen.normal(scale=3), gen.normal(scale=3)
        else:
            # the best affine fit: chord of the outer probes shifted by the optimal amount
            slope = (f[2] - f[0]) / (2 * delta)
            icpt = f[0] - slope * probes[0] + a * delta / 4
        dev = np.max(np.abs(f - (slope * probes + icpt)))
        worst = min(worst, dev - a * delta / 4)
        assert minimax_affine_3pts(*probes, *f) >= a * delta / 4 - 1e-12
    ok = worst >= -1e-12
    record(2, "breakpoint necessary: 3-probe deviation >= |a| delta / 4", ok, f"min slack = {worst:.2e}")
    assert ok


def _well_placed_bin_case(gen):
    eps = gen.uniform(0.01, 0.5)
    part = BinPartition(eps, gen.uniform(1.5, 4))
    full = np.flatnonzero(np.isclose(part.widths(), eps))
    lo, hi = part.bin(int(gen.choice(full)))
    t0 = gen.uniform(lo + eps / 4, hi - eps / 4)
    jump = gen.choice([-1, 1]) * (1.0 if gen.random() < 0.2 else gen.uniform(1, 5))
    return eps, part, (lo, hi), t0, jump


def test_3_steep_neuron_breaks_bin(record):
    gen = np.random.default_rng(3)
    fails, worst_ratio = 0, math.inf
    for _ in range(1000):
        eps, _, bin_, t0, jump = _well_placed_bin_case(gen)
        m_minus = gen.normal(scale=3)
        h = Pwl1D(np.array([t0]), np.array([jump]), m_minus, gen.normal())
        broken, _ = is_bin_broken(h, bin_, C_LEVEL, eps)
        probes = np.array([t0 - eps / 4, t0, t0 + eps / 4])
        val = minimax_affine_3pts(*probes, *h(probes))
        worst_ratio = min(worst_ratio, val / (eps * 1.0 / 16))
        fails += (not broken) or val < eps / 16 * (1 - 1e-9)
    ok = fails == 0
    record(3, "single steep neuron breaks a bin", ok, f"failures = {fails}, min probe/(eps/16) = {worst_ratio:.12f}")
    assert ok


def test_4_broken_bin_prevents_approximation(record):
    gen = np.random.default_rng(4)
    fails, worst, cases = 0, math.inf, 0
    while cases < 1000:
        eps, _, (lo, hi), t0, jump = _well_placed_bin_case(gen)
        extra = gen.uniform(lo, hi, gen.integers(0, 4))
        bps = np.concatenate(([t0], extra))
        js = np.concatenate(([jump], gen.normal(size=extra.size)))
        h = Pwl1D.build(bps, js, gen.normal(), gen.normal())
        broken, _ = is_bin_broken(h, (lo, hi), C_LEVEL, eps)
        if not broken:
            continue
        cases += 1
        # target restriction: a ReLU whose breakpoint lies outside the bin
        side = gen.choice([-1, 1])
        t_star = (hi + gen.uniform(0, 2)) if side > 0 else (lo - gen.uniform(0, 2))
        a = gen.choice([-1, 1]) * gen.uniform(0.1, 3)
        target = Pwl1D.relu(a, -a * t_star)
        sup, _ = sup_abs_on_interval(h - target, lo, hi)
        worst = min(worst, sup / (C_LEVEL * eps))
        fails += sup < C_LEVEL * eps
    ok = fails == 0
    record(4, "broken bin prevents approximation", ok, f"failures = {fails}, min sup/(c eps) = {worst:.4f}")
    assert ok


def _enumerate_hit0(p, q, T, k):
    total = 0.0
    for events in itertools.product((1, 0, -1), repeat=k):
        b, prob = min(1, T), 1.0
        for e in events:
            prob *= {1: p, 0: 1 - p - q, -1: q}[e]
            if (e == 1 and b < T) or (e == -1 and b > 0):
                b += e
        if b == 0:
            total += prob
    return total


def test_5_chain_correctness(record):
    t0 = time.perf_counter()
    grid = [0.1, 0.2, 0.3, 0.4, 0.5]
    worst_enum = 0.0
    for p, q in itertools.product(grid, grid):
        for T in (1, 2, 3):
            for k in range(7):
                worst_enum = max(worst_enum, abs(bd_exact_hit0(ChainParams(p, q, T), k) - _enumerate_hit0(p, q, T, k)))
    worst_z, n, k = 0.0, 100_000, 10
    for i, (p, q) in enumerate(itertools.product(grid, grid)):
        params = ChainParams(p, q, 5)
        paths = simulate_bd_batch(params, k, n, RngStream(500, i))
        exact = bd_distribution(params, k)[:, 0]
        mc = (paths == 0).mean(axis=0)
        se = np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / n)
        worst_z = max(worst_z, float(np.max(np.abs(mc - exact)[1:] / se[1:])))
    elapsed = time.perf_counter() - t0
    ok = worst_enum <= 1e-12 and worst_z <= 4 and elapsed < 60
    record(5, "chain DP vs path enumeration and Monte Carlo", ok,
           f"max enum diff = {worst_enum:.1e}, max |z| = {worst_z:.2f}, {elapsed:.1f} s")
    assert ok


def test_6_chain_decay_shape(record):
    params = ChainParams(0.4, 0.15, 40)
    t0 = time.perf_counter()
    dist = bd_distribution(params, 80)
    elapsed = time.perf_counter() - t0
    ks = np.arange(5, 2 * 40 // 3 + 1)
    slope = fit_log_slope(ks, dist[ks, 0])
    ok = slope < 0 and abs(slope) >= 0.05 and elapsed < 1
    record(6, "log Pr(B_k = 0) decays (p=0.4, q=0.15, T=40)", ok,
           f"slope over k in [5, 26] = {slope:.4f}, DP {elapsed * 1e3:.1f} ms")
    assert ok


def test_7_domination(record):
    cfg = ex.parse_config(overrides=dict(name="coupling", trials=10_000, seed=7000))
    res = ex.run_campaign(cfg)
    s = res.summary
    ok = (s["cap_le_orig_fraction"] == 1.0
          and s["bd_le_cap_fraction_given_precondition"] == 1.0
          and s["cdf_dominance_exact_ok"] and s["cdf_dominance_empirical_ok"]
          and not res.violations)
    record(7, "coupling domination over 1e4 runs", ok,
           f"cap<=orig {s['cap_le_orig_fraction']:.4f}, bd<=cap|pre {s['bd_le_cap_fraction_given_precondition']:.4f}, "
           f"precondition {s['precondition_fraction']:.4f}, p={s['p']:.4f} q={s['q']:.4f}, "
           f"CDF gap {s['max_cdf_gap_cap_over_bd_exact']:.4f} vs band {s['dkw_band']:.4f}")
    assert ok


def test_8_cauchy_breakpoints(record):
    net = sample_network(6, 100_000 // 3 + 1, RngStream(8))
    t = np.concatenate([family_breakpoints(net, fam) for fam in (InputFamily(1), InputFamily(2), InputFamily(3))])
    t = t[np.isfinite(t)][:100_000]
    p = stats.kstest(t, "cauchy").pvalue
    ok = t.size == 100_000 and p > 0.01
    record(8, "family breakpoints are standard Cauchy (KS)", ok, f"n = {t.size}, p-value = {p:.3f}")
    assert ok


def test_9_separation(record):
    cfg = ex.parse_config(overrides=dict(name="separation", d=4, r=2.0, epsilon=0.05, n_h=18,
                                         trials=50, pool=30, seed=0))
    t0 = time.perf_counter()
    res = ex.run_campaign(cfg)
    elapsed = time.perf_counter() - t0
    rates = res.summary["success_rate"]
    neuron, weight = rates["neuron@18"], rates["weight@240"]
    ok = neuron <= 0.10 and weight >= 0.90 and elapsed < 600 and not res.violations
    record(9, "separation at desk scale (50 seeds)", ok,
           f"neuron success {neuron:.2f} (<= 0.10), weight success {weight:.2f} (>= 0.90), {elapsed:.0f} s")
    assert ok


def test_10_single_neuron(record):
    cfg = ex.parse_config(overrides=dict(name="single-neuron", d=10, epsilon=0.05, trials=100_000, seed=10))
    res = ex.run_campaign(cfg)
    s = res.summary
    ok = s["within_3_sigma"] and s["min_gridInfSup_minus_sinTheta"] >= -1e-9
    record(10, "single neuron: cap probability and sin(theta) witness", ok,
           f"empirical {s['p_empirical']:.3g} vs exact {s['p_exact']:.3g} (3 sigma = {3 * s['sigma']:.2g}), "
           f"min slack {s['min_gridInfSup_minus_sinTheta']:.2e}")
    assert ok


SMALL = {
    "separation": dict(trials=4, n_h=10, n_h_sweep=(6, 10)),
    "chain": dict(trials=3000, p=0.3, q=0.1, t_cap=8),
    "bins": dict(trials=4, n_h=12),
    "coupling": dict(trials=12, p=0.15, q=0.02),
    "single-neuron": dict(trials=3000, d=5),
}


def test_11_determinism(record, tmp_path):
    same = {}
    for name, extra in SMALL.items():
        blobs = []
        for run, workers in enumerate((1, 1, 2)):
            cfg = ex.parse_config(overrides=dict(extra, name=name, seed=11, workers=workers))
            res = ex.run_campaign(cfg)
            path = write_csv(tmp_path / f"{name}-{run}.csv", res.columns, res.rows)
            blobs.append(path.read_bytes())
        same[name] = len(set(blobs)) == 1
    ok = all(same.values())
    record(11, "byte-identical CSV across replays and worker counts", ok,
           ", ".join(f"{k}={'same' if v else 'DIFF'}" for k, v in same.items()))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-rA"]))
