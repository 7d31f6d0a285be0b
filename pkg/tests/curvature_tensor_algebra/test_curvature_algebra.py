from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.curvature_algebra import (
    LEMMA_TOL,
    CurvatureError,
    CurvTensor,
    IC_tensor,
    I_tensor,
    JetClass,
    MapJet,
    VectorSym2,
    cauchy_schwarz_defect,
    complex_structure,
    complexified_identity_residual,
    eells_sampson_density,
    energy_densities,
    inner,
    jinv_identity_residual,
    kahler_projection_residual,
    omega_pairing,
    omega_pairing_frame_sum,
    pluriharmonic_obstruction,
    pluriharmonic_obstruction_bruteforce,
    random_curvature_tensor,
    random_jet,
    random_kahler_tensor,
    rank_diagnostics,
    rprs,
    rprs_bruteforce,
    scal,
    scal_C,
    scal_pullback,
    scal_pullback_framesum,
    verify_lemmas,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 3)


def test_identity_tensor_entries():
    I1 = I_tensor(1)
    # I(X, Y, Z, W) = g(Y, Z) g(X, W) - g(X, Z) g(Y, W) with the (X, Y, Z, W) slot order
    assert I1.entries[0, 1, 1, 0] == pytest.approx(-1.0)
    assert I1.entries[0, 1, 0, 1] == pytest.approx(1.0)
    assert np.abs(IC_tensor(1).entries - I1.entries).max() == 0.0
    assert scal(I_tensor(2)) == pytest.approx(12.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_model_tensors_are_curvature_type(m):
    assert I_tensor(m).is_curvature_type()
    assert IC_tensor(m).is_curvature_type()
    assert IC_tensor(m).kahler_residual() < 1e-12
    J = complex_structure(m)
    assert np.allclose(J @ J, -np.eye(2 * m))


def test_tensor_shape_validation():
    with pytest.raises(CurvatureError, match="dimension"):
        CurvTensor(2, np.zeros((2, 2, 2, 2)))


@given(seeds, dims)
def test_random_tensors(seed, m):
    rng = np.random.default_rng(seed)
    T = random_curvature_tensor(m, rng)
    assert T.is_curvature_type(1e-10)
    K = random_kahler_tensor(m, rng)
    assert K.is_curvature_type(1e-9)
    assert K.kahler_residual() < 1e-9 * max(1.0, np.abs(K.entries).max())


@given(seeds, dims)
def test_jinv_identity(seed, m):
    h = VectorSym2.random(m, 3, np.random.default_rng(seed), trace_free=True)
    assert jinv_identity_residual(h) <= LEMMA_TOL


def test_jinv_requires_trace_free(rng):
    with pytest.raises(CurvatureError, match="trace"):
        jinv_identity_residual(VectorSym2.random(2, 1, rng))


@given(seeds, dims)
def test_kahler_projection_orthogonal(seed, m):
    assert kahler_projection_residual(random_kahler_tensor(m, np.random.default_rng(seed))) <= LEMMA_TOL


@given(seeds, dims)
def test_complexified_identity(seed, m):
    assert complexified_identity_residual(random_curvature_tensor(m, np.random.default_rng(seed))) <= LEMMA_TOL


def test_complexified_examples():
    assert scal_C(IC_tensor(1)) == pytest.approx(0.0, abs=1e-14)
    assert inner(IC_tensor(1) - I_tensor(1), IC_tensor(1)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_verify_lemmas(m):
    res = verify_lemmas(m, trials=20, seed=m)
    assert max(res.values()) <= LEMMA_TOL
    with pytest.raises(CurvatureError):
        verify_lemmas(0)


def test_jet_examples():
    j = MapJet(np.array([[1]]), np.array([[0]]))
    assert energy_densities(j) == pytest.approx((2.0, 0.0))
    assert omega_pairing(j) == pytest.approx(4.0)
    assert rprs(j) == pytest.approx((1.0, 0.0))
    assert rprs_bruteforce(j) == pytest.approx((1.0, 0.0))
    r = rank_diagnostics(MapJet(np.array([[1]]), np.array([[0.5]])))
    assert r.classification is JetClass.MIXED and r.real_rank == 2


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_pairing_two_routes(seed, m, n):
    jet = random_jet(m, n, np.random.default_rng(seed))
    assert abs(omega_pairing(jet) - omega_pairing_frame_sum(jet)) <= LEMMA_TOL * max(1.0, abs(omega_pairing(jet)))


@given(seeds, st.integers(1, 2), st.integers(1, 3))
def test_rprs_matches_bruteforce(seed, m, n):
    jet = random_jet(m, n, np.random.default_rng(seed))
    a, b = rprs(jet), rprs_bruteforce(jet)
    assert abs(a[0] - b[0]) <= LEMMA_TOL * max(1.0, abs(a[0]))
    assert abs(a[1] - b[1]) <= LEMMA_TOL * max(1.0, abs(a[1]))


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_real_differential_roundtrip(seed, m, n):
    jet = random_jet(m, n, np.random.default_rng(seed))
    back = MapJet.from_real_differential(jet.real_differential(), m, n)
    assert np.allclose(back.f, jet.f) and np.allclose(back.fbar, jet.fbar)


@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_pluriharmonic_obstruction_two_routes(seed, m, n):
    jet = random_jet(m, n, np.random.default_rng(seed))
    for a, b in ((0, 1), (1, 0)):
        x, y = pluriharmonic_obstruction(jet, a, b), pluriharmonic_obstruction_bruteforce(jet, a, b)
        assert abs(x - y) <= 1e-9 * max(1.0, abs(x))
        assert x >= 0


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_scal_pullback_two_routes(seed, m, n):
    jet = random_jet(m, n, np.random.default_rng(seed))
    x, y = scal_pullback(jet), scal_pullback_framesum(jet)
    assert abs(x - y) <= 1e-9 * max(1.0, abs(x))


def test_holomorphic_jet_classification(rng):
    f = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    r = rank_diagnostics(MapJet(f, np.zeros((2, 2))))
    assert r.classification is JetClass.HOLOMORPHIC and r.obstruction < 1e-12
    a = rank_diagnostics(MapJet(np.zeros((2, 2)), f))
    assert a.classification is JetClass.ANTIHOLOMORPHIC
    low = rank_diagnostics(MapJet(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])))
    assert low.classification is JetClass.LOWRANK


def test_eells_sampson_and_cauchy_schwarz(rng):
    jet = random_jet(2, 2, rng)
    h = VectorSym2.random(2, 4, rng)
    val = eells_sampson_density(jet, h)
    assert np.isfinite(val)
    with pytest.raises(CurvatureError):
        eells_sampson_density(jet, VectorSym2.random(2, 2, rng))
    assert cauchy_schwarz_defect(2.0, 3.0, 6.0) == pytest.approx(0.0)
    with pytest.raises(CurvatureError):
        cauchy_schwarz_defect(0.0, 1.0, 1.0)


def test_vector_sym2_validation(rng):
    with pytest.raises(CurvatureError, match="symmetric"):
        VectorSym2(1, 1, rng.normal(size=(2, 2, 1)) + np.array([[0, 1], [0, 0]])[:, :, None])
    with pytest.raises(CurvatureError, match="dimension"):
        MapJet(np.zeros((1, 2)), np.zeros((2, 1)))
