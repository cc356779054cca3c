"""Weyl averages of integer polynomials at rational frequencies.

At a rational alpha with denom L, n -> P(n) . alpha mod 1 has period L,
so the average over one period is the exact Cesaro limit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .errors import BoundExceeded, get_limits
from .intpoly import IntPolynomialMap
from .modular import TorusRational

TIE_TOL = 1e-12


@dataclass(frozen=True)
class WeylAverage:
    polynomial: str
    alpha: TorusRational
    period: int
    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)


def _phases(P: IntPolynomialMap, nums: np.ndarray, L: int) -> np.ndarray:
    """(P(n) . a) mod L for n in [0, L) and every row a of nums; shape (rows, L)."""
    vals = P.evaluate_mod_many(np.arange(L, dtype=np.int64).reshape(-1, 1), L)  # (L, d)
    return (np.asarray(nums, dtype=np.int64).reshape(-1, P.dimension) @ vals.T) % L


def weyl_average(P: IntPolynomialMap, alpha: TorusRational) -> WeylAverage:
    if P.arity != 1:
        raise ValueError("Weyl averages are taken over one variable")
    if alpha.dimension != P.dimension:
        raise ValueError("frequency dimension differs from the output dimension of P")
    L = alpha.denom
    nums = [int(c * L) for c in alpha.coords]
    ph = _phases(P, np.array([nums]), L)[0]
    value = complex(np.exp(2j * np.pi * ph / L).mean())
    return WeylAverage(P.to_text(), alpha, L, value)


def partial_average(P: IntPolynomialMap, alpha: TorusRational, N: int) -> complex:
    """(1/N) sum_{n<N} e(P(n) . alpha), computed term by term."""
    total = 0j
    for n in range(N):
        phase = sum((Fraction(v) * c for v, c in zip(P.evaluate((n,)), alpha.coords)), Fraction(0)) % 1
        total += np.exp(2j * np.pi * float(phase))
    return total / N


def psi_empirical(P: IntPolynomialMap, q: int) -> float:
    """max |weyl_average(P, alpha)| over alpha in (1/q Z / Z)^d with denom exactly q."""
    if q < 2:
        raise ValueError("psi is defined for q >= 2")
    if P.arity != 1:
        raise ValueError("psi is defined for one-variable maps")
    d = P.dimension
    if q**d > get_limits().enum_bound:
        raise BoundExceeded(f"{q}^{d} frequencies exceed the enumeration bound")
    grid = np.array(list(itertools.product(range(q), repeat=d)), dtype=np.int64)
    g = np.gcd.reduce(np.concatenate([grid, np.full((len(grid), 1), q)], axis=1), axis=1)
    nums = grid[g == 1]
    ph = _phases(P, nums, q)
    return float(np.abs(np.exp(2j * np.pi * ph / q).mean(axis=1)).max())


def psi_table(P: IntPolynomialMap, q_max: int) -> List[Tuple[int, float]]:
    if q_max**P.dimension > get_limits().enum_bound:
        raise BoundExceeded(f"{q_max}^{P.dimension} frequencies exceed the enumeration bound")
    return [(q, psi_empirical(P, q)) for q in range(2, q_max + 1)]


def hua_threshold(P: IntPolynomialMap, target: float, scan_bound: int) -> int:
    """EMPIRICAL: smallest M with psi(q) < target for every q in (M, scan_bound].

    Values within 1e-12 of the target count as not below it.  The scan
    says nothing about q beyond scan_bound.
    """
    if not 0 < target <= 1:
        raise ValueError("target must lie in (0, 1]")
    if scan_bound**P.dimension > get_limits().enum_bound:
        raise BoundExceeded(f"{scan_bound}^{P.dimension} frequencies exceed the enumeration bound")
    below = [psi_empirical(P, q) < target - TIE_TOL for q in range(2, scan_bound + 1)]
    if not below or not below[-1]:
        raise ValueError(f"psi({scan_bound}) is not below {target}; no threshold within the scan")
    M = scan_bound
    while M >= 2 and below[M - 2]:
        M -= 1
    return M
