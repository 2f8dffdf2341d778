"""Minimal-CNOT compilation of qubit IC-POVMs and shadow estimation."""

__version__ = "0.1.0"
