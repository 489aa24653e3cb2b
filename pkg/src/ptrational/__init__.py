"""Exact wall-crossing computations for pair and sheaf counting invariants.

The package computes universal wall-crossing coefficients, Lie brackets in a
vertex-algebra model, and certified quasi-polynomial descriptions of
invariants together with the rational generating functions they define.
"""

__version__ = "0.1.0"
