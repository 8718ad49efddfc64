"""Simulation lab for discretisation schemes of level sets of planar Gaussian fields."""

__version__ = "0.1.0"
