import numpy as np
import pytest

from neuroprune import experiments as ex
from neuroprune.model import families


def run(**kw):
    return ex.run_campaign(ex.parse_config(overrides=kw))


def test_separation_rows_and_sweep():
    res = run(name="separation", trials=3, n_h_sweep=(4, 8), seed=5)
    assert res.columns[:5] == ("seed", "n_h", "arm", "min_error", "success")
    neuron = [r for r in res.rows if r[2] == "neuron"]
    assert len(neuron) == 6 and len([r for r in res.rows if r[2] == "weight"]) == 3
    # nested prefixes: more neurons never hurt
    for seed in (5, 6, 7):
        e4, e8 = (r[3] for r in neuron if r[0] == seed)
        assert e8 <= e4 + 1e-12
    assert set(res.summary["success_rate"]) == {"neuron@4", "neuron@8", "weight@240"}
    assert not res.violations


def test_separation_vacuous_tolerance():
    res = run(name="separation", trials=4, n_h=6, epsilon=0.99, cap_c=3.0)
    assert res.summary["success_rate"]["neuron@6"] == 1.0


def test_separation_rejects_large_width():
    with pytest.raises(ex.ConfigError, match="exhaustive"):
        run(name="separation", n_h=30, trials=1)


def test_chain_forced_absorption_and_conservation():
    res = run(name="chain", p=0.0, q=1.0, t_cap=4, trials=200)
    assert [r[1] for r in res.rows[1:]] == [1.0] * (len(res.rows) - 1)
    assert res.summary["conservation_max_error"] <= 1e-12


def test_chain_dp_matches_monte_carlo():
    res = run(name="chain", p=0.4, q=0.15, t_cap=40, trials=20_000, seed=3)
    exact = np.array([r[1] for r in res.rows])
    mc = np.array([r[2] for r in res.rows])
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / 20_000)
    assert np.all(np.abs(mc - exact)[1:] <= 4 * se[1:])
    assert res.summary["fitted_log_slope"] < 0


def test_chain_calibrates_when_rates_absent():
    res = run(name="chain", trials=100, n_h=4)
    assert res.calibration["source"] == "calibrated"
    assert 0 < res.summary["p"] and res.summary["q"] >= 0.01


def test_bins_initial_counts_and_increments():
    res = run(name="bins", trials=6, n_h=10, d=6)
    rows = np.array([r[:4] for r in res.rows])
    assert set(rows[:, 1]) == {f.i for f in families(6)}
    assert set(rows[rows[:, 2] == 0, 3]) <= {0, 1}
    for seed in set(rows[:, 0]):
        for fam in set(rows[:, 1]):
            traj = rows[(rows[:, 0] == seed) & (rows[:, 1] == fam), 3]
            assert np.all(np.abs(np.diff(traj)) <= 1)
    assert res.summary["multi_event_steps"] == 0


def test_coupling_rows():
    res = run(name="coupling", trials=5, p=0.15, q=0.02)
    rows = np.array([r[1:7] for r in res.rows], dtype=float)
    step, b_orig, b_cap, b_bd, dom, pre = rows.T
    assert np.all(b_cap <= b_orig)
    assert np.all(dom[pre == 1] == 1)
    assert res.summary["cap_le_orig_fraction"] == 1.0


def test_single_neuron_rows():
    res = run(name="single-neuron", trials=500, d=3, epsilon=0.3)
    theta = np.array([r[1] for r in res.rows])
    g = np.array([r[3] for r in res.rows])
    assert np.all(g >= np.sin(theta) - 1e-9)
    assert res.summary["within_3_sigma"]
