"""Simulation of a pointer-coupling measuring process on a periodic lattice."""

__version__ = "0.1.0"
