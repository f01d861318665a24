"""Numerical simulator for spectrally encoded quantum CDMA networks."""

__version__ = "0.1.0"
