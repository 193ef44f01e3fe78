"""Utilities module for InvasionLab."""
