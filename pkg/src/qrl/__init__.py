"""Finite-level laboratory for quantum algorithmic randomness."""

__version__ = "0.1.0"
