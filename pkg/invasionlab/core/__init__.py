"""Core module for InvasionLab – lattice, weights, invasion, outlets."""
