"""Lift & Learn reduced quadratic models for power-network swing dynamics."""

__version__ = "0.1.0"
