"""Fusion-based preparation and analysis of AKLT states on graphs."""

__version__ = "0.1.0"

from .numerics import POLICY, NumericPolicy

__all__ = ["POLICY", "NumericPolicy", "__version__"]
