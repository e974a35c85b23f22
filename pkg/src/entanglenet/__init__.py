"""Entanglement distribution over lossy fiber networks."""

__version__ = "0.1.0"
