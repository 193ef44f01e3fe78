"""Ensemble statistics and limit-law checks."""
