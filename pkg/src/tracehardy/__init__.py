"""Weighted trace Hardy inequalities: constants, profiles, certificates."""
__version__ = "0.1.0"
