"""Numerical laboratory for fourth-order dispersive dynamics on 2D lattices."""

__version__ = "0.1.0"
