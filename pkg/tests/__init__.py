"""Tests for InvasionLab."""
