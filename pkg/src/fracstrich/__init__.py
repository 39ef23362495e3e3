"""Numerical verification of weighted Strichartz estimates for radial fractional Schrödinger evolutions."""

__version__ = "0.1.0"
