"""Periods and G-function relations for families of Legendre elliptic curves pulled back along rational maps."""

from .errors import GPeriodError, NotImplementedCase, UsageError
from .family import FamilySpec, RationalMap, bundled_family, load_family
from .numerics import ComplexBall, QuadField, QuadFieldElem

__version__ = "0.1.0"

__all__ = [
    "ComplexBall",
    "FamilySpec",
    "GPeriodError",
    "NotImplementedCase",
    "QuadField",
    "QuadFieldElem",
    "RationalMap",
    "UsageError",
    "bundled_family",
    "load_family",
]
