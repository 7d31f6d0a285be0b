from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chtoledo.harmonic_solver import model_map
from chtoledo.mesh import build_mesh
from chtoledo.surface_groups import build_fuchsian, fuchsian_rep

settings.register_profile(
    "chtoledo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("chtoledo")


@pytest.fixture(scope="session")
def models():
    return {key: build_fuchsian(*key) for key in [(2, 0), (1, 1), (0, 3)]}


@pytest.fixture(scope="session")
def mesh11(models):
    return build_mesh(models[(1, 1)], 0.3, 3.0)


@pytest.fixture(scope="session")
def mesh03(models):
    return build_mesh(models[(0, 3)], 0.3, 3.0)


@pytest.fixture(scope="session")
def fuchsian_model_map11(models, mesh11):
    return model_map(fuchsian_rep(models[(1, 1)], 1), mesh11)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA, RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, _, _ in CRITERIA:
        if cid in RESULTS:
            terminalreporter.write_line(RESULTS[cid])
