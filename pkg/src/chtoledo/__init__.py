"""Numerical toolkit for complex hyperbolic geometry and the Toledo invariant of surface groups."""

from __future__ import annotations

__version__ = "0.1.0"
