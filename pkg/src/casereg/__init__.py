"""Robust and efficient model fitting via penalized case-specific adjustments."""

__version__ = "0.1.0"
