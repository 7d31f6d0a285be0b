from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chtoledo.serialization import complex_to_json, dumps, matrix_from_json, matrix_to_json, vector_from_json, vector_to_json

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(st.lists(st.tuples(finite, finite), min_size=2, max_size=2), min_size=2, max_size=2))
def test_matrix_roundtrip(rows):
    M = np.array([[complex(a, b) for a, b in r] for r in rows])
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(M)))), M)


def test_complex_encodings():
    assert complex_to_json(1 - 2j) == [1.0, -2.0]
    assert np.array_equal(vector_from_json([1, [0, 1], "2+3i"]), np.array([1, 1j, 2 + 3j]))
    assert vector_to_json([1j]) == [[0.0, 1.0]]


def test_ragged_matrix_rejected():
    with pytest.raises(ValueError, match="ragged"):
        matrix_from_json([[1, 2], [3]])
    with pytest.raises(ValueError):
        vector_from_json([{"re": 1}])


def test_dumps_deterministic_and_numpy_aware():
    obj = {"b": np.float64(1.5), "a": np.arange(3), "c": np.bool_(True), "z": 1j}
    text = dumps(obj)
    assert text == dumps(dict(reversed(list(obj.items()))))
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": True, "z": [0.0, 1.0]}
    with pytest.raises(TypeError):
        dumps({"x": object()})
