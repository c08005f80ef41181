"""Limit cycles of planar polynomial systems: divergence curves, contact
points, counting bounds, an energy descent over periodic paths and an ODE
oracle to check it against."""

from .errors import DomainError, Hilbert16Error, NumericFailure
from .paths import DiscretizedPath
from .poly import BivariatePoly, Box2, PlanarSystem, parse_poly

__all__ = [
    "BivariatePoly",
    "Box2",
    "DiscretizedPath",
    "DomainError",
    "Hilbert16Error",
    "NumericFailure",
    "PlanarSystem",
    "parse_poly",
]
__version__ = "0.1.0"
