"""Spectral numerics for the Schrödinger flow on the split torus."""

__version__ = "0.1.0"
