from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.mesh import (
    MeshError,
    build_mesh,
    delaunay_flips,
    disk_distances,
    disk_geodesic,
    triangle_angles,
)
from chtoledo.surface_groups import mobius

disk = st.builds(lambda r, a: r * complex(math.cos(a), math.sin(a)), st.floats(0, 0.95), st.floats(0, 6.3))


@given(disk, disk, st.floats(0, 1))
def test_disk_geodesic_splits_distance(a, b, s):
    p = disk_geodesic(a, b, s)
    d = disk_distances(np.array([a]), np.array([b]))[0]
    assert disk_distances(np.array([a]), np.array([p]))[0] == pytest.approx(s * d, abs=1e-8)
    assert disk_distances(np.array([p]), np.array([b]))[0] == pytest.approx((1 - s) * d, abs=1e-8)


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.1, 3))
def test_triangle_angles_defect(a, b, c):
    if not (a < b + c and b < a + c and c < a + b):
        return
    ang = triangle_angles(np.array(a), np.array(b), np.array(c))
    assert np.all(ang >= 0) and ang.sum() < math.pi + 1e-12


def test_mesh_rejects_bad_parameters(models):
    with pytest.raises(MeshError):
        build_mesh(models[(1, 1)], 0.0)
    with pytest.raises(MeshError):
        build_mesh(models[(1, 1)], 0.3, -1.0)


@pytest.mark.parametrize("key", [(2, 0), (1, 1), (0, 3)])
def test_mesh_area_and_topology(models, key):
    mesh = build_mesh(models[key], 0.3, 3.0)
    assert mesh.total_area() == pytest.approx(mesh.expected_area(), rel=1e-6)
    assert np.all(mesh.triangle_area > 0)
    # Euler characteristic of the truncated quotient surface
    chi = mesh.n_orbits - len(mesh.edges) + len(mesh.triangles)
    assert chi == models[key].topology.chi
    assert mesh.clamped_weights == 0
    assert len(mesh.boundary_edges) == key[1]


def test_copies_are_group_translates(mesh11):
    model = mesh11.model
    for v in range(mesh11.n_vertices):
        base = mesh11.positions[mesh11.orbit_rep[mesh11.orbit[v]]]
        img = mobius(model.evaluate(mesh11.words[v]), base)
        assert abs(img - mesh11.positions[v]) < 1e-8


def test_pinned_vertices_are_orbit_closed(mesh03):
    pinned = mesh03.orbit_pinned()
    assert pinned.any()
    assert np.array_equal(np.unique(mesh03.orbit[mesh03.pinned]), np.nonzero(pinned)[0])


def test_refinement_keeps_area(models):
    coarse = build_mesh(models[(1, 1)], 0.4, 3.0)
    fine = build_mesh(models[(1, 1)], 0.2, 3.0)
    assert fine.n_vertices > coarse.n_vertices
    assert fine.total_area() == pytest.approx(coarse.total_area(), rel=1e-6)


def test_delaunay_flip_fixes_obtuse_pair():
    pos = np.array([0.0, 0.5, 0.25 + 0.02j, 0.25 - 0.02j])
    tris = np.array([[0, 1, 2], [1, 0, 3]])
    out, flips = delaunay_flips(pos, tris)
    assert flips == 1
    assert {tuple(sorted(t)) for t in out} == {(0, 2, 3), (1, 2, 3)}


def test_mesh_summary_keys(mesh11):
    s = mesh11.summary()
    assert set(s) >= {"vertices", "orbits", "triangles", "edge_orbits", "area", "expected_area"}
