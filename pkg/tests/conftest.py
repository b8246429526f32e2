"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the code paths they check: Gramians by
adaptive quadrature of the defining integral, projections by enumerating
active sets of the small QP, derivatives by central differences.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm

import ctrlscore as cs


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_stable_matrix(rng, dim: int, margin: float = 0.5) -> np.ndarray:
    """Random dense matrix shifted to spectral abscissa <= -margin."""
    raw = rng.standard_normal((dim, dim))
    shift = float(np.max(np.linalg.eigvals(raw).real)) + margin
    return raw - shift * np.eye(dim)


def random_stable_family(rng, dim: int, margin: float = 0.5) -> cs.NodeGramianFamily:
    system = cs.check_stability(random_stable_matrix(rng, dim, margin))
    return cs.gramian_family(system, range(1, dim + 1))


def random_diagonal_model(rng, size: int, low: float = 0.3,
                          high: float = 3.0) -> cs.SpectralModel:
    """Diagonal spectral table with entries bounded away from 0."""
    table = np.diag(rng.uniform(low, high, size))
    return cs.SpectralModel(tuple(range(1, size + 1)), table, size)


def random_commuting_family(rng, dim: int) -> cs.NodeGramianFamily:
    """Genuine Gramian family with commuting members: symmetric dynamics,
    nodes along its eigenvectors."""
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    decay = -rng.uniform(0.5, 3.0, dim)
    dynamics = (basis * decay) @ basis.T
    system = cs.check_stability(dynamics)
    return cs.gramian_family(system, range(1, dim + 1), basis=basis)


def interior_point(rng, size: int, floor: float = 0.08) -> np.ndarray:
    """Random simplex point with every coordinate >= roughly ``floor``."""
    sample = rng.dirichlet(np.ones(size))
    mixed = (1.0 - floor * size) * sample + floor
    return mixed / mixed.sum()


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def gramian_by_quadrature(a_matrix: np.ndarray, direction: np.ndarray,
                          upper: float = 40.0, tol: float = 1e-13) -> np.ndarray:
    """Adaptive quadrature of the defining Gramian integral."""
    rank_one = np.outer(direction, direction)

    def integrand(t):
        phi = expm(t * a_matrix)
        return phi @ rank_one @ phi.T

    value, _ = quad_vec(integrand, 0.0, upper, epsabs=tol, epsrel=tol)
    return value


def project_by_active_set(point: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Tiny-QP projection oracle: enumerate all lower/upper active sets."""
    m = point.size
    best, best_dist = None, np.inf
    for pattern in itertools.product((0, 1, 2), repeat=m):  # 0 free, 1 at 0, 2 at cap
        fixed = sum(caps[i] for i in range(m) if pattern[i] == 2)
        free = [i for i in range(m) if pattern[i] == 0]
        x = np.zeros(m)
        for i in range(m):
            if pattern[i] == 2:
                x[i] = caps[i]
        if free:
            tau = (sum(point[i] for i in free) + fixed - 1.0) / len(free)
            for i in free:
                x[i] = point[i] - tau
        if abs(x.sum() - 1.0) > 1e-9:
            continue
        if np.any(x < -1e-12) or np.any(x > caps + 1e-12):
            continue
        dist = float(np.sum((x - point) ** 2))
        if dist < best_dist - 1e-15:
            best, best_dist = np.clip(x, 0.0, caps), dist
    assert best is not None, "oracle found no feasible active set"
    return best


def central_gradient(func, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(point)
    for i in range(point.size):
        bump = np.zeros_like(point)
        bump[i] = h
        grad[i] = (func(point + bump) - func(point - bump)) / (2.0 * h)
    return grad


def central_hessian(grad_func, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    m = point.size
    hess = np.zeros((m, m))
    for j in range(m):
        bump = np.zeros(m)
        bump[j] = h
        hess[:, j] = (grad_func(point + bump) - grad_func(point - bump)) / (2.0 * h)
    return 0.5 * (hess + hess.T)
