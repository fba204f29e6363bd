"""Fluctuation formulas for linear statistics of random matrix spectra."""
__version__ = "0.1.0"
