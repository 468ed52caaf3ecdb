"""Collective-spin squeezing and phase estimation in the symmetric Dicke subspace."""

__version__ = "0.1.0"
