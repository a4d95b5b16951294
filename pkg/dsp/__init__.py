"""Spectral analysis and synthesis primitives."""
