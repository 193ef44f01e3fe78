"""InvasionLab – simulation laboratory for 2D invasion percolation."""

__version__ = "0.1.0"
