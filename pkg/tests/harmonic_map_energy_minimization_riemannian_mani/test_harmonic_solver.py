from __future__ import annotations

import numpy as np
import pytest

from chtoledo.harmonic_solver import (
    BoundaryDriftError,
    EquivariantMap,
    SolverConfig,
    SolverError,
    check_drift,
    cusp_energy_profile,
    discrete_energy,
    minimize,
    model_map,
    perturb_map,
    retraction_energy,
)
from chtoledo.surface_groups import deformed_fuchsian_rep, fuchsian_rep


@pytest.fixture(scope="module")
def solved11(fuchsian_model_map11):
    return minimize(fuchsian_model_map11, SolverConfig(max_sweeps=3000))


def test_retraction_energy_values():
    assert retraction_energy(3).value == pytest.approx(1.5, abs=1e-8)
    assert retraction_energy(4).value == pytest.approx(1.25, abs=1e-8)
    r2 = retraction_energy(2)
    assert r2.divergent and r2.value is None
    for m in range(3, 8):
        assert retraction_energy(m).value == pytest.approx(1.0 + 1.0 / (2 * (m - 2)), abs=1e-8)
    with pytest.raises(SolverError):
        retraction_energy(1)


def test_solver_converges_monotone(solved11, fuchsian_model_map11):
    sol, rep = solved11
    assert rep.converged and rep.status == "converged"
    assert rep.monotone
    assert np.all(np.diff(rep.energy_log) <= 1e-12 * max(1.0, rep.energy_log[0]))
    assert rep.equivariance_max <= 1e-9
    assert rep.energy <= discrete_energy(fuchsian_model_map11)
    assert rep.colors >= 2


def test_solution_is_stable_under_perturbation(solved11, rng):
    sol, rep = solved11
    moved = perturb_map(sol, 0.05, rng)
    back, rep2 = minimize(moved, SolverConfig(max_sweeps=3000))
    assert rep2.converged
    assert rep2.energy == pytest.approx(rep.energy, rel=1e-6)


def test_pinned_orbits_do_not_move(solved11, fuchsian_model_map11):
    sol, _ = solved11
    pinned = sol.mesh.orbit_pinned()
    assert np.allclose(sol.images[pinned], fuchsian_model_map11.images[pinned], atol=1e-12)


def test_colorize_and_plain_gauss_seidel_agree(models):
    from chtoledo.mesh import build_mesh

    mesh = build_mesh(models[(1, 1)], 0.6, 2.0)
    f = model_map(fuchsian_rep(models[(1, 1)], 1), mesh)
    _, ref = minimize(f, SolverConfig(max_sweeps=3000))
    _, rep = minimize(f, SolverConfig(max_sweeps=3000, colorize=False))
    assert ref.converged and rep.converged
    assert rep.energy == pytest.approx(ref.energy, rel=1e-6)


def test_acceleration_off_still_descends(fuchsian_model_map11):
    _, rep = minimize(fuchsian_model_map11, SolverConfig(max_sweeps=40, accelerate=False))
    assert rep.monotone and rep.energy_log[-1] < rep.energy_log[0]


def test_source_seed_requires_uniformization(mesh11):
    rep = deformed_fuchsian_rep(mesh11.model, 1.2)
    with pytest.raises(SolverError):
        model_map(rep, mesh11, seed="source")


def test_boundary_drift_detected(fuchsian_model_map11):
    f = fuchsian_model_map11
    X = f.images.copy()
    free = np.nonzero(~f.mesh.orbit_pinned())[0][0]
    X[free] = np.array([1.0 - 1e-9, 1.0])
    with pytest.raises(BoundaryDriftError):
        check_drift(EquivariantMap(f.mesh, f.rep, X, f.context))


def test_tame_profile_convergent(solved11):
    sol, _ = solved11
    profiles = cusp_energy_profile(sol)
    assert len(profiles) == 1
    assert profiles[0].peripheral == "parabolic"
    assert profiles[0].verdict == "Convergent"


def test_hyperbolic_profile_slope(mesh11):
    rep = deformed_fuchsian_rep(mesh11.model, 1.2)
    prof = cusp_energy_profile(model_map(rep, mesh11))[0]
    assert prof.peripheral == "hyperbolic"
    assert prof.slope == pytest.approx(1.0, abs=0.1)
    assert prof.verdict == "Divergent"


def test_report_json(solved11):
    _, rep = solved11
    d = rep.to_json()
    assert d["converged"] and d["status"] == "converged" and isinstance(d["energy_log"], list)


def test_solver_on_su21_embedding(models, mesh03):
    rep = fuchsian_rep(models[(0, 3)], 2)
    sol, sr = minimize(model_map(rep, mesh03), SolverConfig(max_sweeps=3000))
    assert sr.converged and sr.monotone
    # the solution stays in the embedded complex line
    assert np.abs(sol.images[:, 1]).max() < 1e-8
