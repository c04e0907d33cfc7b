"""Numerical laboratory for the Yang-Mills gradient flow on lattice tori."""

__version__ = "0.1.0"
