"""Superconducting resonator modelling, fitting and simulated field campaigns."""
__version__ = "0.1.0"
