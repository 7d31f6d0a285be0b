from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.chs_models import (
    BallPoint,
    BoundaryPointError,
    HorosphericalPoint,
    KahlerPotential,
    Model,
    SiegelPoint,
    apply_J,
    beta_form,
    chart_of,
    convert,
    dc_identity_check,
    distance,
    geodesic,
    geodesic_length_oracle,
    height,
    kahler_form,
    lift,
    metric_eval,
    metric_matrix,
    perturb,
    point_from_json,
    point_to_json,
    potential_eval,
    varsigma_eval,
)
from chtoledo.hermitian_core import HermitianForm, ProjectiveLift
from chtoledo.surface_groups import random_su_n1


def random_ball_point(rng, n, radius=0.9):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return BallPoint(z / np.linalg.norm(z) * radius * rng.uniform() ** (1 / (2 * n)))


def numeric_exterior_derivative(pot, p, x, y, h=1e-6):
    x, y = np.asarray(x, float), np.asarray(y, float)

    def f(q, v):
        return varsigma_eval(pot, q, v)

    a = (f(perturb(p, h * x), y) - f(perturb(p, -h * x), y)) / (2 * h)
    b = (f(perturb(p, h * y), x) - f(perturb(p, -h * y), x)) / (2 * h)
    return a - b


def test_height_examples():
    assert height(SiegelPoint(np.zeros(0), 0.5)) == pytest.approx(1.0)
    assert height(SiegelPoint(np.array([1.0]), 1.0)) == pytest.approx(1.0)


def test_convert_siegel_to_horospherical():
    h = convert(SiegelPoint(np.zeros(0), 0.5), Model.HOROSPHERICAL)
    assert h.t == pytest.approx(0.0) and h.v == pytest.approx(0.0)


def test_boundary_point_rejected():
    with pytest.raises(BoundaryPointError):
        convert(SiegelPoint(np.zeros(0), 0.0), Model.HOROSPHERICAL)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_conversion_roundtrip(seed, n):
    p = random_ball_point(np.random.default_rng(seed), n)
    for target in (Model.SIEGEL, Model.HOROSPHERICAL):
        back = convert(convert(p, target), Model.BALL)
        assert np.allclose(back.z, p.z, atol=1e-9)


def test_metric_examples():
    hp = HorosphericalPoint(np.zeros(0), 0.0, 0.7)
    assert metric_eval(chart_of(hp), hp, [0, 1], [0, 1]) == pytest.approx(1.0)
    assert metric_eval(chart_of(hp), hp, [1, 0], [1, 0]) == pytest.approx(math.exp(-1.4))
    bp = BallPoint(np.array([0.5]))
    assert metric_eval(chart_of(bp), bp, [1, 0], [1, 0]) == pytest.approx(64 / 9)


def test_kahler_form_origin():
    b0 = BallPoint(np.array([0.0]))
    assert kahler_form(chart_of(b0), b0, [1, 0], [0, 1]) == pytest.approx(4.0)


@given(st.integers(0, 2**32 - 1))
def test_complex_structure(seed):
    rng = np.random.default_rng(seed)
    for p in (random_ball_point(rng, 2), HorosphericalPoint(np.array([0.3j]), 0.2, rng.normal())):
        x = rng.normal(size=4)
        assert np.allclose(apply_J(p, apply_J(p, x)), -x, atol=1e-9)
        M = metric_matrix(p)
        assert np.allclose(M, M.T, atol=1e-9)
        assert np.all(np.linalg.eigvalsh(M) > 0)
        y = rng.normal(size=4)
        ch = chart_of(p)
        assert np.isclose(metric_eval(ch, p, apply_J(p, x), apply_J(p, y)), metric_eval(ch, p, x, y))


def test_distance_examples():
    assert distance(BallPoint(np.array([0.0])), BallPoint(np.array([0.5]))) == pytest.approx(math.log(3), abs=1e-9)
    S1 = HermitianForm.siegel(1)
    p = ProjectiveLift(np.array([-1, 1], dtype=complex), S1)
    g = np.diag([np.exp(0.5), np.exp(-0.5)]).astype(complex)
    assert distance(p, ProjectiveLift(g @ p.v, S1)) == pytest.approx(1.0, abs=1e-9)


def test_geodesic_midpoint():
    mid = geodesic(BallPoint(np.array([-0.5])), BallPoint(np.array([0.5])), 0.5)
    assert np.allclose(mid.z, 0.0, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_distance_oracle(seed, n):
    rng = np.random.default_rng(seed)
    p, q = random_ball_point(rng, n), random_ball_point(rng, n)
    assert abs(distance(p, q) - geodesic_length_oracle(p, q)) <= 1e-6


@given(st.integers(0, 2**32 - 1))
def test_distance_invariance(seed):
    rng = np.random.default_rng(seed)
    f = HermitianForm.ball(2)
    p, q = random_ball_point(rng, 2), random_ball_point(rng, 2)
    g = random_su_n1(2, rng)
    gp = ProjectiveLift(g @ lift(p).v, f)
    gq = ProjectiveLift(g @ lift(q).v, f)
    assert np.isclose(distance(gp, gq), distance(p, q), rtol=1e-8, atol=1e-8)
    r = random_ball_point(rng, 2)
    assert distance(p, r) <= distance(p, q) + distance(q, r) + 1e-9


def test_beta_examples():
    assert beta_form(HorosphericalPoint(np.zeros(0), 0, 0), [1, 0]) == pytest.approx(-1.0)
    assert beta_form(HorosphericalPoint(np.array([1j]), 0.0, 0.0), [1, 0, 0, 0]) == pytest.approx(2.0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_dc_identity(v, t, a, b):
    assert dc_identity_check(HorosphericalPoint(np.zeros(0), v, t)) <= 1e-8
    assert dc_identity_check(HorosphericalPoint(np.array([complex(a, b)]), v, t)) <= 1e-8


def test_potential_values():
    assert potential_eval(KahlerPotential.elliptic_at_origin(1), BallPoint(np.array([0.0]))) == pytest.approx(0.0)
    pp = KahlerPotential.parabolic_at_infinity(1)
    assert potential_eval(pp, SiegelPoint(np.zeros(0), 0.5)) == pytest.approx(0.0)
    assert potential_eval(pp, HorosphericalPoint(np.zeros(0), 0, 0.8)) == pytest.approx(0.8)


def test_parabolic_varsigma_is_minus_scaled_beta():
    # with our orientation dvarsigma = omega forces varsigma = -e^{-t} beta
    pp = KahlerPotential.parabolic_at_infinity(1)
    hq = HorosphericalPoint(np.zeros(0), 0.3, 0.8)
    for x in ([1, 0], [0, 1]):
        assert varsigma_eval(pp, hq, x) == pytest.approx(-math.exp(-0.8) * beta_form(hq, x), abs=1e-12)


@pytest.mark.parametrize("kind", ["elliptic", "parabolic"])
def test_varsigma_primitive_of_omega(kind):
    pot = KahlerPotential.elliptic_at_origin(2) if kind == "elliptic" else KahlerPotential.parabolic_at_infinity(2)
    p = BallPoint(np.array([0.2 + 0.1j, -0.3j]))
    rng = np.random.default_rng(3)
    for _ in range(3):
        x, y = rng.normal(size=4), rng.normal(size=4)
        assert numeric_exterior_derivative(pot, p, x, y) == pytest.approx(kahler_form(chart_of(p), p, x, y), rel=1e-6)


def test_potential_anchor_validation():
    with pytest.raises(Exception):
        KahlerPotential(KahlerPotential.parabolic_at_infinity(1).kind, ProjectiveLift(np.array([0, 1.0]), HermitianForm.ball(1)))


@given(st.integers(0, 2**32 - 1))
def test_point_json_roundtrip(seed):
    p = random_ball_point(np.random.default_rng(seed), 2)
    for q in (p, convert(p, Model.SIEGEL), convert(p, Model.HOROSPHERICAL)):
        r = point_from_json(point_to_json(q))
        assert r.model is q.model
        assert np.allclose(convert(r, Model.BALL).z, p.z, atol=1e-9)
