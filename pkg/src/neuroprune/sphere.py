"""Single retained neuron: angle to the target and the spherical-cap bound."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

DEFAULT_A_GRID = np.union1d(np.linspace(-1.0, 3.0, 4001), [0.0, 1.0])


def angle(w_star, w) -> np.ndarray:
    """Angle between ``w_star`` and each row of ``w`` (both unit length)."""
    cos = np.clip(np.asarray(w, dtype=float) @ np.asarray(w_star, dtype=float), -1.0, 1.0)
    return np.arccos(cos)


def orthogonal_witness(w_star, w) -> np.ndarray:
    """Unit ``x`` in span{w*, w} with ``<w, x> = 0`` and ``<w*, x> = sin(theta)``."""
    w_star = np.asarray(w_star, dtype=float)
    w = np.asarray(w, dtype=float)
    u = w_star - (w_star @ w) * w
    n = np.linalg.norm(u)
    if n == 0:
        # aligned or opposite: any unit vector orthogonal to w will do
        e = np.zeros_like(w)
        e[np.argmin(np.abs(w))] = 1.0
        u = e - (e @ w) * w
        n = np.linalg.norm(u)
    return u / n


def grid_inf_sup(theta, a_grid=DEFAULT_A_GRID) -> np.ndarray:
    """Grid estimate of ``inf_a max`` over witness points of ``|f - a relu(<w, x>)|``.

    Witness points: ``x = w*`` (error ``|1 - a cos+|``), ``x = w`` (error
    ``|cos+ - a|``) and the orthogonal witness (error ``sin(theta)``), where
    ``cos+ = max(cos(theta), 0)``.  Each is a lower bound on the sup over
    the unit ball, hence so is the result for each ``a``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    cplus = np.maximum(np.cos(theta), 0.0)[:, None]
    a = np.asarray(a_grid, dtype=float)[None, :]
    worst = np.maximum(np.abs(1.0 - a * cplus), np.abs(cplus - a))
    worst = np.maximum(worst, np.sin(theta)[:, None])
    return worst.min(axis=1)


def witness_errors(w_star, w, a: float) -> np.ndarray:
    """Direct evaluation of ``|f(x) - a relu(<w, x>)|`` at the three witness points."""
    w_star = np.asarray(w_star, dtype=float)
    w = np.asarray(w, dtype=float)
    pts = np.stack([w_star, w, orthogonal_witness(w_star, w)])
    return np.abs(np.maximum(pts @ w_star, 0) - a * np.maximum(pts @ w, 0))


def cap_probability(d: int, half_angle: float) -> float:
    """Normalized area of a spherical cap of ``half_angle`` on the sphere in R^d, by quadrature."""
    if d < 2:
        raise ValueError("d must be >= 2")
    half_angle = min(max(half_angle, 0.0), math.pi)
    num, _ = integrate.quad(lambda t: math.sin(t) ** (d - 2), 0.0, half_angle, epsabs=0, epsrel=1e-12)
    den, _ = integrate.quad(lambda t: math.sin(t) ** (d - 2), 0.0, math.pi, epsabs=0, epsrel=1e-12)
    return num / den


def cap_probability_beta(d: int, half_angle: float) -> float:
    """Closed form via the regularized incomplete beta function."""
    half = 0.5 * special.betainc((d - 1) / 2, 0.5, math.sin(half_angle) ** 2)
    return half if half_angle <= math.pi / 2 else 1.0 - half
