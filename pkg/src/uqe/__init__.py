"""Uncertainty-feature pipeline for machine translation quality estimation."""

from .similarity import KERNEL_BACKEND, sim

__version__ = "0.1.0"

__all__ = ["sim", "KERNEL_BACKEND", "__version__"]
