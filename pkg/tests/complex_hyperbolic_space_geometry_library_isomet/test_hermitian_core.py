from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.hermitian_core import (
    Convention,
    HermitianError,
    HermitianForm,
    ProjectiveLift,
    cayley_transfer,
    eigen_decompose,
    form_eval,
    hform,
    normalize_max_entry,
    to_special,
    transfer_lift,
    transfer_matrix,
    unitary_inverse,
    validate_group,
)
from chtoledo.surface_groups import random_su_n1

B1 = HermitianForm.ball(1)
S1 = HermitianForm.siegel(1)


def test_form_values():
    assert form_eval(np.array([0, 1]), np.array([0, 1]), B1) == pytest.approx(-1)
    assert form_eval(np.array([1, 0]), np.array([1, 0]), B1) == pytest.approx(1)
    assert form_eval(np.array([-1, 1]), np.array([-1, 1]), S1) == pytest.approx(-2)


def test_form_dimension_mismatch():
    with pytest.raises(HermitianError, match="dimension"):
        form_eval(np.array([1, 0, 0]), np.array([1, 0]), B1)
    with pytest.raises(HermitianError):
        HermitianForm.ball(0)


def test_gram_signatures():
    for n in (1, 2, 3):
        for f in (HermitianForm.ball(n), HermitianForm.siegel(n)):
            ev = np.linalg.eigvalsh(f.gram)
            assert (ev < 0).sum() == 1 and (ev > 0).sum() == n
    assert HermitianForm.siegel(2).convention is Convention.SIEGEL


@given(st.integers(0, 2**32 - 1))
def test_sesquilinearity(seed):
    rng = np.random.default_rng(seed)
    g = HermitianForm.ball(2).gram
    v, w, u = (rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(3))
    a = complex(rng.normal(), rng.normal())
    assert np.isclose(hform(a * v + u, w, g), a * hform(v, w, g) + hform(u, w, g))
    assert np.isclose(hform(v, a * w, g), np.conj(a) * hform(v, w, g))
    assert np.isclose(hform(v, w, g), np.conj(hform(w, v, g)))


def test_validate_group():
    assert validate_group(np.eye(2), B1).ok
    assert validate_group(np.diag([np.exp(0.3j), np.exp(-0.3j)]), B1).ok
    bad = validate_group(np.diag([2.0, 1.0]), B1)
    assert not bad.ok and bad.form_residual > 0.1


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_random_elements_preserve_form(seed, n):
    g = random_su_n1(n, np.random.default_rng(seed))
    f = HermitianForm.ball(n)
    assert validate_group(g, f).ok
    assert np.allclose(unitary_inverse(g, f) @ g, np.eye(n + 1), atol=1e-9)


def test_to_special_det_one():
    m = 2.0 * np.exp(0.4j) * np.eye(3)
    assert np.isclose(np.linalg.det(to_special(m)), 1.0)


def test_jordan_block_deficiency():
    ed = eigen_decompose(np.array([[1, 1], [0, 1]], dtype=complex))
    assert ed.deficient
    assert np.allclose(ed.values, [1, 1])


def test_eigen_hyperbolic():
    ed = eigen_decompose(np.diag([np.exp(0.5), np.exp(-0.5)]))
    assert not ed.deficient
    assert np.allclose(sorted(np.abs(ed.values)), [np.exp(-0.5), np.exp(0.5)])


def test_cayley_origin_and_boundary():
    C = cayley_transfer(B1, S1)
    origin = ProjectiveLift(C @ np.array([0, 1], dtype=complex), S1)
    assert origin.is_interior()
    edge = C @ np.array([1, 1], dtype=complex)
    assert abs(hform(edge, edge, S1.gram)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_transfer_roundtrip(seed):
    rng = np.random.default_rng(seed)
    f2, s2 = HermitianForm.ball(2), HermitianForm.siegel(2)
    g = random_su_n1(2, rng)
    gs = transfer_matrix(g, f2, s2)
    assert validate_group(gs, s2, 1e-8).ok
    assert np.allclose(transfer_matrix(gs, s2, f2), g, atol=1e-9)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    p = ProjectiveLift(v, f2)
    q = transfer_lift(p, s2)
    assert np.isclose(p.norm, q.norm)


def test_normalize_max_entry():
    u = normalize_max_entry(np.array([0.1, -3j, 1.0]))
    assert np.isclose(u[1], 1.0)
    with pytest.raises(HermitianError):
        ProjectiveLift(np.zeros(2), B1)
