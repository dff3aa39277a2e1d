"""Monotone-iteration solver and integral-condition classifier for radial
quasilinear p-Laplacian systems with gradient terms."""

__version__ = "0.1.0"
