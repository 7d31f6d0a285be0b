"""The batch interface is a pure function from a validated config to (status, JSON)."""

from __future__ import annotations

import json

import pytest
from pydantic import ValidationError

from chtoledo.cli import ExperimentConfig, run


def test_request_response_contract():
    cfg = ExperimentConfig(command="cusp-energy", m=3)
    status, text = run(cfg)
    body = json.loads(text)
    assert status == 0
    assert set(body) == {"command", "status", "provenance", "result"}
    assert body["provenance"]["config"]["command"] == "cusp-energy"
    assert set(body["provenance"]) == {"version", "seed", "config"}


def test_run_is_deterministic():
    cfg = ExperimentConfig(command="verify-lemmas", m=1, trials=3, seed=5)
    assert run(cfg) == run(cfg)


def test_request_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(command="serve")
    with pytest.raises(ValidationError):
        ExperimentConfig(command="tau", resolution=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(command="tau", surprise=True)


def test_error_payload_shape():
    status, text = run(ExperimentConfig(command="cusp-energy", m=1))
    body = json.loads(text)
    assert status == 1 and "error" in body["result"]


def test_output_written(tmp_path):
    out = tmp_path / "r.json"
    status, text = run(ExperimentConfig(command="cusp-energy", m=4, output=str(out)))
    assert out.read_text() == text
