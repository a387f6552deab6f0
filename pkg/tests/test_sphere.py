import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuroprune.model import sample_unit_sphere
from neuroprune.rng import RngStream
from neuroprune.sphere import (DEFAULT_A_GRID, angle, cap_probability, cap_probability_beta, grid_inf_sup,
                               orthogonal_witness, witness_errors)


@pytest.mark.parametrize("d", [2, 3, 4, 10, 25])
@pytest.mark.parametrize("phi", [0.05, 0.1, 0.7, 1.5, 2.5])
def test_cap_quadrature_matches_beta(d, phi):
    assert cap_probability(d, phi) == pytest.approx(cap_probability_beta(d, phi), rel=1e-9, abs=1e-15)


def test_cap_closed_forms():
    assert cap_probability(3, 0.4) == pytest.approx((1 - math.cos(0.4)) / 2)
    assert cap_probability(2, 0.4) == pytest.approx(0.4 / math.pi)
    assert cap_probability(7, math.pi) == pytest.approx(1.0)


def test_cap_probability_monte_carlo_d3():
    w_star = np.array([0.0, 0.0, 1.0])
    w = sample_unit_sphere(3, RngStream(1), size=200_000)
    p = cap_probability(3, 0.3)
    emp = np.mean(angle(w_star, w) <= 0.3)
    assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / 200_000)


def test_alignment_and_orthogonal_cases():
    assert grid_inf_sup(0.0)[0] == pytest.approx(0.0, abs=1e-15)
    assert grid_inf_sup(math.pi / 2)[0] == pytest.approx(1.0)
    assert 1.0 in DEFAULT_A_GRID


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32))
def test_witness_geometry_and_lower_bound(d, seed):
    gen = np.random.default_rng(seed)
    w_star, w = sample_unit_sphere(d, gen), sample_unit_sphere(d, gen)
    th = float(angle(w_star, w))
    x = orthogonal_witness(w_star, w)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert x @ w == pytest.approx(0.0, abs=1e-12)
    assert x @ w_star == pytest.approx(math.sin(th), abs=1e-9)
    g = grid_inf_sup(th)[0]
    assert g >= math.sin(th) - 1e-9
    # the grid value is attained: some grid a gives exactly this witness maximum
    errs = np.array([witness_errors(w_star, w, a).max() for a in DEFAULT_A_GRID[::50]])
    assert g <= errs.min() + 1e-9


def test_orthogonal_witness_for_aligned_vectors():
    w = np.array([1.0, 0.0, 0.0])
    x = orthogonal_witness(w, w)
    assert x @ w == pytest.approx(0.0) and np.linalg.norm(x) == pytest.approx(1.0)
