"""Kernel-energy maximization over bounded densities and constrained pointsets."""
from maxenergy._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
