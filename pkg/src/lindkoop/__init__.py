"""Koopman operator learning for a dephasing Heisenberg spin chain."""

from .propagator import AVAILABLE_BACKENDS, BACKEND

__all__ = ["AVAILABLE_BACKENDS", "BACKEND"]
__version__ = "0.1.0"
