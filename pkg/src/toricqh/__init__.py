"""Exact quantum cohomology of toric varieties from a q-deformed semigroup ring."""

__version__ = "0.1.0"
