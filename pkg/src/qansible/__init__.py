"""Simulation and audit of a CNOT-cascade superluminal signaling proposal."""

__version__ = "0.1.0"
