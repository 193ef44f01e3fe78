"""Bernoulli percolation toolkit – crossings, circuits, correlation length."""
