from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize as scipy_minimize

from chtoledo.chs_models import distance_lifts, hyperboloid
from chtoledo.harmonic_solver import exp_map, log_map
from chtoledo.hermitian_core import HermitianForm


def random_points(rng, k, n):
    z = rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n))
    z = z / np.linalg.norm(z, axis=1, keepdims=True) * rng.uniform(0, 0.85, size=(k, 1))
    X = np.concatenate([z, np.ones((k, 1))], axis=1)
    return hyperboloid(X, HermitianForm.ball(n).gram)


def karcher(points, weights, gram, iters=200):
    X = points[:1].copy()
    for _ in range(iters):
        V, _ = log_map(np.repeat(X, len(points), 0), points, gram)
        M = (weights[:, None] * V).sum(0, keepdims=True) / weights.sum()
        X = exp_map(X, M, gram)
    return X[0]


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_log_exp_inverse(seed, n):
    rng = np.random.default_rng(seed)
    g = HermitianForm.ball(n).gram
    X, Y = random_points(rng, 2, n)
    V, _ = log_map(X[None], Y[None], g)
    Z = exp_map(X[None], V, g)[0]
    assert distance_lifts(Z, Y, g) < 1e-7
    # |V| = d / 2 in the hyperboloid pairing
    norm = np.sqrt(np.real(np.conj(V[0]) @ g @ V[0]))
    assert norm == pytest.approx(distance_lifts(X, Y, g) / 2, rel=1e-8, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_two_point_mean_is_midpoint(seed):
    rng = np.random.default_rng(seed)
    g = HermitianForm.ball(2).gram
    P = random_points(rng, 2, 2)
    m = karcher(P, np.ones(2), g)
    d = distance_lifts(P[0], P[1], g)
    assert distance_lifts(m, P[0], g) == pytest.approx(d / 2, abs=1e-8)
    assert distance_lifts(m, P[1], g) == pytest.approx(d / 2, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_weighted_mean_matches_direct_minimizer(seed):
    rng = np.random.default_rng(seed)
    n = 1
    g = HermitianForm.ball(n).gram
    P = random_points(rng, 5, n)
    w = rng.uniform(0.2, 2.0, size=5)
    m = karcher(P, w, g)

    def cost(x):
        z = complex(x[0], x[1])
        if abs(z) >= 0.999:
            return 1e6
        X = hyperboloid(np.array([z, 1.0]), g)
        return float((w * distance_lifts(np.broadcast_to(X, P.shape), P, g) ** 2).sum())

    mz = m[0] / m[1]
    res = scipy_minimize(cost, [0.0, 0.0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 5000})
    zo = complex(*res.x)
    assert abs(mz - zo) < 1e-5
    assert cost([mz.real, mz.imag]) <= res.fun + 1e-9
