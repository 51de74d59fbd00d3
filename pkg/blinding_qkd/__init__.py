"""Pulse-illumination blinding attack analysis for decoy-state BB84."""

__version__ = "1.0.0"
