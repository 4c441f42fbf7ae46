"""Numerical laboratory for short-interval mean squares of divisor error terms."""

__version__ = "0.1.0"
