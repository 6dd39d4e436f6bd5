"""Exact product-set growth experiments in SL2(F_p) and SL3(F_p)."""

__version__ = "0.1.0"
