"""Numerical certification of Kähler manifolds admitting a flat complex conformal connection."""

__version__ = "0.1.0"
