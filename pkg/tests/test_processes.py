import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from neuroprune.bins import BinPartition, BinTracker, broken_bin_count
from neuroprune.model import (InputFamily, SubsetMask, TwoLayerNet, family_breakpoints, family_jumps,
                              restrict_subnet, restrict_target, sample_network, sample_target)
from neuroprune.processes import (ChainParams, RateBook, bd_distribution, bd_exact_hit0,
                                  calibrate_chain_params, capped_from_original, default_neuron_sampler,
                                  default_t_cap, empty_bin_break_probability, empty_bin_table,
                                  estimate_transition_probs, sample_nondegenerate_target, simulate_bd,
                                  simulate_capped, simulate_coupled, simulate_original)
from neuroprune.pwl import residual
from neuroprune.rng import RngStream

C = 1 / 16
PART = BinPartition(0.05, 2.0)
FAM = InputFamily(1)


def test_chain_params_validation():
    with pytest.raises(ValueError):
        ChainParams(0.7, 0.5, 3)
    with pytest.raises(ValueError):
        ChainParams(0.1, 0.1, 0)
    assert ChainParams(0.4, 0.15, 40).drift_condition
    assert not ChainParams(0.2, 0.15, 40).drift_condition


def test_default_cap():
    assert default_t_cap(2.0, 0.05) == 10


def test_forced_absorption():
    params = ChainParams(0.0, 1.0, 5)
    assert all(bd_exact_hit0(params, k) == 1.0 for k in range(1, 8))
    assert bd_exact_hit0(params, 0) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.6), st.floats(0, 0.4), st.integers(1, 12), st.integers(0, 30))
def test_distribution_conserves_mass(p, q, T, k):
    dist = bd_distribution(ChainParams(p, q, T), k)
    np.testing.assert_allclose(dist.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(dist >= 0)


def test_distribution_matches_matrix_power():
    params = ChainParams(0.3, 0.2, 4)
    P = np.zeros((5, 5))
    for b in range(5):
        up = params.p if b < 4 else 0.0
        down = params.q if b > 0 else 0.0
        P[b, min(b + 1, 4)] += up
        P[b, max(b - 1, 0)] += down
        P[b, b] += 1 - up - down
    e1 = np.eye(5)[1]
    dist = bd_distribution(params, 9)
    for k in range(10):
        np.testing.assert_allclose(dist[k], e1 @ np.linalg.matrix_power(P, k), atol=1e-14)


def test_single_path_respects_bounds():
    params = ChainParams(0.5, 0.4, 3)
    traj = simulate_bd(params, 200, RngStream(1))
    assert traj.states[0] == 1 and traj.k == 200
    assert traj.states.min() >= 0 and traj.states.max() <= 3
    assert np.all(np.abs(traj.increments()) <= 1)


def test_capped_clamps_increments():
    orig = np.array([1, 2, 3, 4, 3, 2, 1, 0, 0, 1])
    np.testing.assert_array_equal(capped_from_original(orig, 2), [1, 2, 2, 2, 1, 0, 0, 0, 0, 1])
    assert np.all(capped_from_original(orig, 2) <= orig)


def test_capped_never_exceeds_original_random():
    gen = np.random.default_rng(0)
    for _ in range(200):
        orig = np.concatenate(([gen.integers(0, 3)], gen.integers(-1, 2, 30))).cumsum()
        orig = np.maximum(orig, 0)
        cap = capped_from_original(orig, int(gen.integers(1, 5)))
        assert np.all(cap <= orig)


def _recount(net, order, fam, target, part, k):
    out = []
    for s in range(k + 1):
        mask = SubsetMask.of(*order[:s])
        h = residual(restrict_subnet(net, mask, fam), restrict_target(target, fam))
        out.append(broken_bin_count(h, part, C)[0])
    return np.array(out)


@pytest.mark.parametrize("seed", range(6))
def test_original_process_matches_recount(seed):
    gen = np.random.default_rng(seed)
    net = sample_network(4, 14, gen)
    target = sample_target(4, gen)
    order = list(gen.permutation(14))
    for fam in (InputFamily(1), InputFamily(2)):
        traj = simulate_original(net, order, fam, target, PART, 14, C)
        np.testing.assert_array_equal(traj.states, _recount(net, order, fam, target, PART, 14))
        assert traj.multi_event_steps == 0
        assert np.all(np.abs(traj.increments()) <= 1)
        cap = simulate_capped(net, order, fam, target, PART, 14, C, t_cap=3)
        assert np.all(cap.states <= traj.states) and cap.states.max() <= 3


def test_breakpoints_outside_give_flat_trajectory():
    target = sample_target(4, RngStream(3))
    W = np.array([[1.0, -5.0, 0.3, 0.2], [-2.0, -9.0, 1.0, 1.0], [0.5, 3.0, 0, 0]])
    net = TwoLayerNet(W, np.array([2.0, -1.0, 3.0]))
    traj = simulate_original(net, None, FAM, target, PART, 3, C)
    assert np.all(traj.states == traj.states[0])


def test_fresh_jump_law():
    net = sample_network(4, 200_000, RngStream(4))
    t = family_breakpoints(net, FAM)
    j = family_jumps(net, FAM)
    ok = np.isfinite(t)
    z = np.abs(j[ok]) * np.sqrt(1 + t[ok] ** 2)
    assert stats.kstest(z, "expon").pvalue > 0.01
    # independence from the breakpoint: same law on |t| < 1 and |t| > 1
    assert stats.ks_2samp(z[np.abs(t[ok]) < 1], z[np.abs(t[ok]) > 1]).pvalue > 0.01


def test_empty_bin_probability_matches_monte_carlo():
    empty = BinTracker(PART, C)
    p_mc, q_mc = estimate_transition_probs(default_neuron_sampler(4), FAM, PART, C, empty, 200_000, RngStream(5))
    p_quad = empty_bin_table(PART, C).sum()
    se = math.sqrt(p_quad * (1 - p_quad) / 200_000)
    assert q_mc == 0.0
    assert abs(p_mc - p_quad) <= 4 * se


def test_single_bin_probability_against_direct_simulation():
    lo, hi = PART.bin(30)
    net = sample_network(4, 400_000, RngStream(6))
    t, j = family_breakpoints(net, FAM), family_jumps(net, FAM)
    inside = (t > lo) & (t < hi)
    hit = inside & (np.abs(j) * (t - lo) * (hi - t) / (2 * (hi - lo)) >= C * 0.05)
    p = empty_bin_break_probability(lo, hi, C * 0.05)
    assert abs(hit.mean() - p) <= 4 * math.sqrt(p * (1 - p) / t.size)


def test_ratebook_matches_fresh_sampling():
    gen = np.random.default_rng(7)
    target = sample_nondegenerate_target(4, FAM, PART, C, gen)
    tracker = BinTracker.from_pwl(-restrict_target(target, FAM), PART, C)
    for _ in range(6):
        net = sample_network(4, 1, gen)
        tracker.add(float(family_breakpoints(net, FAM)[0]), float(family_jumps(net, FAM)[0] * np.sign(net.alpha[0])))
    book = RateBook(tracker, np.random.default_rng(8), n_samples=4096)
    p_mc, q_mc = estimate_transition_probs(default_neuron_sampler(4), FAM, PART, C, tracker, 200_000, RngStream(9))
    assert book.birth() == pytest.approx(p_mc, abs=0.01)
    assert book.death() == pytest.approx(q_mc, abs=0.005)


def test_coupling_dominates():
    params = ChainParams(0.15, 0.02, 10)
    for seed in range(40):
        gen = RngStream(seed, 3).generator()
        target = sample_nondegenerate_target(4, FAM, PART, C, gen)
        net = sample_network(4, 18, gen)
        run = simulate_coupled(net, None, FAM, target, PART, 18, 10, params, gen, C)
        assert run.cap_le_orig.all()
        if run.precondition_ok:
            assert run.bd_le_cap.all()
        np.testing.assert_array_equal(run.cap.states, capped_from_original(run.orig.states, 10))


def test_coupling_rejects_mismatched_cap():
    with pytest.raises(ValueError):
        simulate_coupled(sample_network(4, 2, RngStream(0)), None, FAM, sample_target(4, RngStream(1)),
                         PART, 2, 10, ChainParams(0.1, 0.1, 9), RngStream(2))


def test_calibration_respects_margins():
    params, info = calibrate_chain_params(4, FAM, PART, C, 10, 6, RngStream(10), n_trials=5000, pilot_runs=2,
                                          target_sampler=lambda g: sample_nondegenerate_target(4, FAM, PART, C, g))
    assert params.p == pytest.approx(0.85 * info["p_hat_floor"])
    assert params.q >= 0.01 and params.q >= 1.5 * info["q_hat_ceiling"] - 1e-15
    assert params.t_cap == 10
