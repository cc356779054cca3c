"""Desk-scale verification of polynomial recurrence and expansion in finite
rotation systems: value sets, Smith forms, spectral measures, measure
increments, exponential sums and windowed combinatorial checks."""

__version__ = "0.1.0"

from .errors import BoundExceeded, InvariantViolation, Limits, get_limits
from .intpoly import IntPolynomialMap, parse_polynomial
from .modular import TorusRational, crt_combine, enumerate_rat, factorize

__all__ = [
    "BoundExceeded",
    "InvariantViolation",
    "Limits",
    "get_limits",
    "IntPolynomialMap",
    "parse_polynomial",
    "TorusRational",
    "crt_combine",
    "enumerate_rat",
    "factorize",
]
