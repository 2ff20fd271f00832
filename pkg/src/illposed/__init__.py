"""Numerical laboratory for loss of continuity of the Euler data-to-solution map."""

__version__ = "0.1.0"
