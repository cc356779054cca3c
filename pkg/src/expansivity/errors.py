"""Exception types and desk-scale limits shared by every module."""

import os
from dataclasses import dataclass


class BoundExceeded(Exception):
    """A computation would exceed a configured desk-scale bound."""


class InvariantViolation(RuntimeError):
    """An internal post-condition failed.

    Raised when a check that the mathematics guarantees does not hold.
    Callers must never swallow this: it means either a bug or a genuine
    discrepancy with the theory being implemented.
    """


@dataclass(frozen=True)
class Limits:
    factor_bound: int = 10**12
    modulus_bound: int = 10**6
    state_bound: int = 2 * 10**6
    enum_bound: int = 10**7


_ENV = {
    "factor_bound": "EXPANSIVITY_FACTOR_BOUND",
    "modulus_bound": "EXPANSIVITY_MODULUS_BOUND",
    "state_bound": "EXPANSIVITY_STATE_BOUND",
    "enum_bound": "EXPANSIVITY_ENUM_BOUND",
}


def get_limits() -> Limits:
    """Current limits, with ``EXPANSIVITY_*`` environment overrides applied."""
    values = {}
    for field, var in _ENV.items():
        raw = os.environ.get(var)
        if raw:
            value = int(raw)
            if value <= 0:
                raise ValueError(f"{var} must be positive, got {raw!r}")
            values[field] = value
    return Limits(**values)
