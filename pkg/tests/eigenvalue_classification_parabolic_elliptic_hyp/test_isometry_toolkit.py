from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.chs_models import HorosphericalPoint
from chtoledo.hermitian_core import HermitianError, HermitianForm
from chtoledo.isometry_toolkit import (
    HeisenbergElement,
    IsometryType,
    StabilizerElement,
    WrongTypeError,
    classify,
    cusp_rotation_check,
    fixes_infinity,
    heisenberg_commutator,
    heisenberg_mul,
    matrix_action,
    stabilizer_action,
    to_matrix,
    translation_length,
)
from chtoledo.surface_groups import random_su_n1

B1 = HermitianForm.ball(1)
S1 = HermitianForm.siegel(1)
heis = st.builds(
    lambda a, b, c: HeisenbergElement(np.array([complex(a, b)]), c),
    st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
)


def test_classify_elliptic():
    c = classify(np.diag([np.exp(0.3j), np.exp(-0.3j)]), B1)
    assert c.type is IsometryType.ELLIPTIC
    v = c.fixed_points[0]
    assert abs(v[0]) < 1e-12


def test_classify_hyperbolic_length():
    g = np.diag([np.exp(0.5), np.exp(-0.5)]).astype(complex)
    c = classify(g, S1)
    assert c.type is IsometryType.HYPERBOLIC
    assert c.length == pytest.approx(1.0, abs=1e-8)
    assert translation_length(c) == pytest.approx(1.0, abs=1e-8)


def test_classify_parabolic():
    c = classify(to_matrix(HeisenbergElement(np.zeros(0), 1.0), S1), S1)
    assert c.type is IsometryType.PARABOLIC
    v = c.fixed_points[0]
    assert abs(v[1]) < 1e-12 and abs(v[0]) > 0.5


def test_classify_rejects_non_group():
    with pytest.raises(HermitianError, match="not-in-group"):
        classify(np.diag([2.0, 1.0]), B1)


def test_translation_length_wrong_type():
    with pytest.raises(WrongTypeError):
        translation_length(classify(np.eye(2), B1))


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_hyperbolic_fixed_points_null_and_fixed(seed, n):
    rng = np.random.default_rng(seed)
    f = HermitianForm.ball(n)
    g = random_su_n1(n, rng, scale=1.5)
    c = classify(g, f)
    for v in c.fixed_points:
        img = g @ v
        lam = np.vdot(v, img) / np.vdot(v, v)
        assert np.linalg.norm(img - lam * v) <= 1e-6 * np.linalg.norm(img)
    if c.type is IsometryType.HYPERBOLIC:
        assert abs(translation_length(c) - c.length) <= 1e-6 * max(1.0, c.length)
        assert abs(c.length - c.spectral_length) <= 1e-6 * max(1.0, c.length)


@given(st.integers(0, 2**32 - 1))
def test_classification_conjugation_invariant(seed):
    rng = np.random.default_rng(seed)
    f = HermitianForm.ball(2)
    g, h = random_su_n1(2, rng), random_su_n1(2, rng)
    c0 = classify(g, f)
    c1 = classify(h @ g @ np.linalg.inv(h), f)
    assert c0.type is c1.type


def test_heisenberg_examples():
    a = heisenberg_mul(HeisenbergElement(np.zeros(0), 1), HeisenbergElement(np.zeros(0), 2))
    assert a.nu == pytest.approx(3.0)
    b = heisenberg_mul(HeisenbergElement(np.array([1]), 0), HeisenbergElement(np.array([1j]), 0))
    assert np.allclose(b.xi, [1 + 1j]) and b.nu == pytest.approx(-2.0)


def test_commutator_follows_product_law():
    # the product law above forces nu = 2 * (-2) for the commutator
    c = heisenberg_commutator(HeisenbergElement(np.array([1]), 0), HeisenbergElement(np.array([1j]), 0))
    assert np.allclose(c.xi, 0) and c.nu == pytest.approx(-4.0)


@given(heis, heis, heis)
def test_heisenberg_group_axioms(a, b, c):
    left = heisenberg_mul(heisenberg_mul(a, b), c)
    right = heisenberg_mul(a, heisenberg_mul(b, c))
    assert np.allclose(left.xi, right.xi) and np.isclose(left.nu, right.nu)
    e = heisenberg_mul(a, a.inverse())
    assert np.allclose(e.xi, 0) and abs(e.nu) < 1e-12
    k = heisenberg_commutator(a, b)
    assert np.allclose(k.xi, 0)


@given(heis, heis)
def test_heisenberg_matrix_homomorphism(a, b):
    S2 = HermitianForm.siegel(2)
    lhs = to_matrix(heisenberg_mul(a, b), S2)
    rhs = to_matrix(a, S2) @ to_matrix(b, S2)
    assert np.allclose(lhs, rhs, atol=1e-10)
    assert fixes_infinity(lhs)


def test_stabilizer_examples():
    p = stabilizer_action(StabilizerElement(HeisenbergElement.identity(1), np.eye(0), 1.0), HorosphericalPoint(np.zeros(0), 0, 0))
    assert p.t == pytest.approx(-2.0)
    q = stabilizer_action(StabilizerElement(HeisenbergElement(np.zeros(0), 1.0), np.eye(0), 0.0), HorosphericalPoint(np.zeros(0), 0.4, 0.2))
    assert q.v == pytest.approx(1.4) and q.t == pytest.approx(0.2)


def test_stabilizer_m2_example_sign():
    # z -> z + 1 applied at z = i with v = t = 0; the twist term gives v = -2
    r = stabilizer_action(StabilizerElement(HeisenbergElement(np.array([1.0]), 0.0), np.eye(1), 0.0), HorosphericalPoint(np.array([1j]), 0, 0))
    assert np.allclose(r.z, [1 + 1j]) and r.v == pytest.approx(-2.0) and r.t == pytest.approx(0.0)


def test_flow_translation_length():
    fl = to_matrix(StabilizerElement(HeisenbergElement.identity(1), np.eye(0), 0.5), S1)
    c = classify(fl, S1)
    assert c.type is IsometryType.HYPERBOLIC and c.length == pytest.approx(1.0)


@given(heis, st.floats(-1, 1), st.floats(0, 6.28), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_stabilizer_action_matches_matrix(h, s, theta, a, b, v, t):
    elem = StabilizerElement(h, np.array([[np.exp(1j * theta)]]), s)
    p = HorosphericalPoint(np.array([complex(a, b)]), v, t)
    x = stabilizer_action(elem, p)
    y = matrix_action(to_matrix(elem), p)
    assert np.allclose(x.z, y.z, atol=1e-9) and np.isclose(x.v, y.v, atol=1e-9) and np.isclose(x.t, y.t, atol=1e-9)


@given(heis, heis, st.floats(-1, 1), st.floats(-1, 1))
def test_stabilizer_composition(h1, h2, s1, s2):
    e1 = StabilizerElement(h1, np.eye(1), s1)
    e2 = StabilizerElement(h2, np.eye(1), s2)
    p = HorosphericalPoint(np.array([0.3 - 0.2j]), 0.1, 0.4)
    x = stabilizer_action(e1 @ e2, p)
    y = stabilizer_action(e1, stabilizer_action(e2, p))
    assert np.allclose(x.z, y.z) and np.isclose(x.v, y.v) and np.isclose(x.t, y.t)
    z = stabilizer_action(e1.inverse(), stabilizer_action(e1, p))
    assert np.allclose(z.z, p.z) and np.isclose(z.v, p.v) and np.isclose(z.t, p.t)


def test_cusp_rotation_check():
    assert cusp_rotation_check(1, (1, 0.3 + 1j)).valid
    assert cusp_rotation_check(1j, (1, 1j)).valid
    v = cusp_rotation_check(1j, (1, 0.3 + 1j))
    assert not v.valid and "square" in v.reason
    assert not cusp_rotation_check(np.exp(1j * np.pi / 4), (1, 1j)).valid
    w = np.exp(1j * np.pi / 3)
    assert cusp_rotation_check(w, (1, w)).valid
    with pytest.raises(HermitianError, match="degenerate"):
        cusp_rotation_check(1, (1, 2))
