"""Deterministic training of the vocoder."""
