"""Finite bisimulations, synthesis and verification for switched linear
systems with polyhedral Lyapunov functions."""

__version__ = "0.1.0"
