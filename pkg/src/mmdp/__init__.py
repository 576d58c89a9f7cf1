"""Micro-mobility dispatch: QUBO formulations, annealing samplers and a fleet simulator."""

__version__ = "0.1.0"
