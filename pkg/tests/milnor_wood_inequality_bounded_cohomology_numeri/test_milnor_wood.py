from __future__ import annotations

import numpy as np
import pytest

from chtoledo.harmonic_solver import EquivariantMap, SolverConfig, model_map
from chtoledo.surface_groups import bent_rep, fuchsian_rep, random_rep, upper_triangular_rep
from chtoledo.toledo import (
    Classification,
    MilnorWoodViolation,
    TauReport,
    milnor_wood_report,
    rigidity_diagnostics,
)


def test_fuchsian_is_maximal_consistent(models, mesh03):
    rep = fuchsian_rep(models[(0, 3)], 1)
    r = milnor_wood_report(rep, fmap=model_map(rep, mesh03), cfg=SolverConfig(max_sweeps=3000))
    assert r.classification is Classification.MAXIMAL_CONSISTENT
    assert r.rigidity is not None and r.rigidity.verdict in ("isometry", "near-isometry")
    assert r.solver["converged"]


def test_bent_rep_is_interior(models, mesh11):
    rep = bent_rep(models[(1, 1)], 0.3, 2)
    r = milnor_wood_report(rep, fmap=model_map(rep, mesh11), cfg=SolverConfig(max_sweeps=200), check_truncation=False)
    assert r.classification is Classification.INTERIOR and r.ratio < 0.99


@pytest.mark.parametrize("seed", range(4))
def test_random_reps_under_bound(models, seed):
    rep = random_rep(models[(1, 1)], 2, np.random.default_rng(seed))
    r = milnor_wood_report(rep, resolution=0.4, cfg=SolverConfig(max_sweeps=20), check_truncation=False)
    assert r.ratio <= 1.02


def test_non_reductive_report(models, rng):
    r = milnor_wood_report(upper_triangular_rep(models[(1, 1)], 2, rng))
    assert r.tau == 0.0 and "non-reductive" in r.flags


def test_model_map_flag_when_not_solving(models, mesh11):
    rep = fuchsian_rep(models[(1, 1)], 1)
    r = milnor_wood_report(rep, fmap=model_map(rep, mesh11), solve=False, check_truncation=False)
    assert "model-map" in r.flags


def test_violation_raised_when_tolerance_is_negative(models, mesh11):
    rep = fuchsian_rep(models[(1, 1)], 1)
    with pytest.raises(MilnorWoodViolation):
        milnor_wood_report(rep, fmap=model_map(rep, mesh11), solve=False, tol_report=-0.5, check_truncation=False)


def test_rigidity_constant_map_rank0(mesh11):
    from chtoledo.surface_groups import SurfaceRep

    rep = SurfaceRep(mesh11.model, 1, [np.eye(2, dtype=complex)] * 2, "trivial")
    f = EquivariantMap(mesh11, rep, np.tile(np.array([0, 1], dtype=complex), (mesh11.n_orbits, 1)))
    rg = rigidity_diagnostics(f)
    assert rg.rank0 and rg.verdict == "rank-0"


def test_rigidity_identity_isometry(models):
    from chtoledo.mesh import build_mesh

    mesh = build_mesh(models[(2, 0)], 0.3, 3.0)
    f = model_map(fuchsian_rep(models[(2, 0)], 1), mesh, seed="source")
    rg = rigidity_diagnostics(f)
    assert rg.verdict == "isometry"
    assert rg.lambda_max == pytest.approx(1.0, abs=0.05)
    assert rg.curvature_mean == pytest.approx(-1.0, abs=0.05)


def test_report_type(models, mesh11):
    rep = fuchsian_rep(models[(1, 1)], 1)
    r = milnor_wood_report(rep, fmap=model_map(rep, mesh11), solve=False, check_truncation=False)
    assert isinstance(r, TauReport)
