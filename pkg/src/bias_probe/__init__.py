"""Appearance-bias learning pipeline with synthetic ground truth."""

__version__ = "0.1.0"
