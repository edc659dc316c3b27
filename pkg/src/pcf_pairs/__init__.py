"""Photon pairs from four-wave mixing in a photonic crystal fiber and their two-photon interference."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
