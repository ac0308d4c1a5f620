"""Numerical verification toolkit for the invariant kernel exp(-z (lambda coth lambda - 1))
on the Lobachevsky space."""

__version__ = "0.1.0"
