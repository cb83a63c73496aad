"""Entropy-correction artificial viscosity DGSEM for the compressible Euler equations."""

__version__ = "0.1.0"
