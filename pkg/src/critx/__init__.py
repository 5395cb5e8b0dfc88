"""Finite-size crossing analysis of quantum critical points in 1D spin chains."""

__version__ = "0.1.0"
