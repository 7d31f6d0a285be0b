"""JSON encodings: complex numbers as [re, im] pairs, matrices row-major."""

from __future__ import annotations

import json
from typing import Any

import numpy as np


def complex_to_json(c: complex) -> list[float]:
    c = complex(c)
    return [float(c.real), float(c.imag)]


def vector_to_json(v) -> list[list[float]]:
    return [complex_to_json(c) for c in np.asarray(v, dtype=complex).ravel()]


def matrix_to_json(m) -> list[list[list[float]]]:
    a = np.asarray(m, dtype=complex)
    return [[complex_to_json(c) for c in row] for row in a]


def _parse_complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, str):
        return complex(x.replace(" ", "").replace("i", "j"))
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise ValueError(f"cannot read complex number from {x!r}")


def vector_from_json(data) -> np.ndarray:
    return np.array([_parse_complex(x) for x in data], dtype=complex)


def matrix_from_json(data) -> np.ndarray:
    rows = [[_parse_complex(x) for x in row] for row in data]
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError("ragged matrix")
    return np.array(rows, dtype=complex)


def _default(o: Any):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return complex_to_json(o)
    if hasattr(o, "model_dump"):
        return o.model_dump(mode="json")
    raise TypeError(f"not serializable: {type(o).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(obj, default=_default, sort_keys=True, indent=2)
