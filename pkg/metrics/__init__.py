"""Objective quality metrics for synthesized speech."""
