"""Spectral engine for radial Schroedinger flows with a decaying harmonic term and an inverse-square potential."""

__version__ = "0.1.0"
