"""Contextuality and CHSH nonlocality on random pure two-qubit states."""

__version__ = "0.1.0"
