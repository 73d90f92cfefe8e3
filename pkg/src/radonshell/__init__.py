"""Reciprocal-simplex shell integrals, adjoint Radon decay and odd-dimensional free waves."""
from .errors import DegenerateGeometryError, InvalidInputError, UnsupportedDimensionError

__version__ = "0.1.0"

__all__ = ["DegenerateGeometryError", "InvalidInputError", "UnsupportedDimensionError",
           "__version__"]
