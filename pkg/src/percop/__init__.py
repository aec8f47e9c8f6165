"""Periodic copolymer and pinning models near an interface.

Exact finite-volume partition functions, the spectral free-energy formula,
infinite-volume renewal limits and path samplers.
"""

__version__ = "0.1.0"
