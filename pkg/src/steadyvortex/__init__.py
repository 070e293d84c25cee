"""Numerical laboratory for concentrated steady vortices of the 2D Euler equations."""

__version__ = "0.1.0"
