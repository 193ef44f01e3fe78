"""Configuration module for InvasionLab."""
