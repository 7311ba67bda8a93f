"""Greedy averaging over eavesdropped neighbour values: simulation and convergence-bound toolkit."""

__version__ = "0.1.0"
