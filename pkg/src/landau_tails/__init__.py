"""Landau-level disk spectra, enlargement-of-obstacles certificates and alloy IDS experiments."""

from .kernels import BACKEND
from .landau_basis import FieldConfig, LandauIndex, PlanePoint

__version__ = "0.1.0"

__all__ = ["BACKEND", "FieldConfig", "LandauIndex", "PlanePoint", "__version__"]
