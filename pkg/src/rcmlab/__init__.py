"""Simulation tools for the random connection model of continuum percolation."""

__version__ = "0.1.0"
