"""Modular arithmetic substrate: rational torus points, Rat(M), CRT, factorization."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, isqrt, lcm, prod
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

from .errors import BoundExceeded, get_limits


@dataclass(frozen=True)
class TorusRational:
    """A rational point of the d-torus, coordinates reduced into [0, 1)."""

    coords: Tuple[Fraction, ...]

    def __post_init__(self):
        reduced = tuple(Fraction(c) % 1 for c in self.coords)
        object.__setattr__(self, "coords", reduced)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def denom(self) -> int:
        return lcm(1, *(c.denominator for c in self.coords))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def dot(self, v: Sequence[int]) -> Fraction:
        """v . alpha reduced mod 1."""
        if len(v) != len(self.coords):
            raise ValueError("dimension mismatch")
        return sum((int(a) * c for a, c in zip(v, self.coords)), Fraction(0)) % 1

    def to_json(self) -> dict:
        return {"coords": [f"{c.numerator}/{c.denominator}" for c in self.coords], "denom": self.denom}

    @classmethod
    def from_json(cls, data: dict) -> "TorusRational":
        point = cls(tuple(Fraction(s) for s in data["coords"]))
        if "denom" in data and int(data["denom"]) != point.denom:
            raise ValueError("denom field disagrees with coordinates")
        return point

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def reduce_torus_point(raw: Iterable[Tuple[int, int]]) -> TorusRational:
    """Build a torus point from (numerator, denominator) pairs."""
    coords = []
    for num, den in raw:
        if den == 0:
            raise ZeroDivisionError("zero denominator in torus coordinate")
        coords.append(Fraction(int(num), int(den)))
    return TorusRational(tuple(coords))


def enumerate_rat(M: int, grid: Sequence[int]) -> set:
    """Nonzero points of prod (1/g_i)Z/Z whose denom is at most M."""
    if any(g < 1 for g in grid):
        raise ValueError("grid moduli must be positive")
    out = set()
    if M < 2:
        return out
    axes = [[Fraction(j, g) for j in range(g)] for g in grid]
    for coords in itertools.product(*axes):
        den = lcm(1, *(c.denominator for c in coords))
        if 1 < den <= M:
            out.add(TorusRational(coords))
    return out


def crt_combine(residues: Sequence[int], moduli: Sequence[int]) -> Tuple[int, int]:
    """The residue r mod prod(moduli) with r = residues[i] mod moduli[i]."""
    if len(residues) != len(moduli):
        raise ValueError("residues and moduli differ in length")
    if any(m < 1 for m in moduli):
        raise ValueError("moduli must be positive")
    for a, b in itertools.combinations(moduli, 2):
        if gcd(a, b) != 1:
            raise ValueError(f"moduli {a} and {b} are not coprime")
    n = prod(moduli)
    r = 0
    for a, m in zip(residues, moduli):
        if m == 1:
            continue
        rest = n // m
        r += a * rest * pow(rest, -1, m)
    return r % n, n


@dataclass(frozen=True)
class Factorization:
    factors: Tuple[Tuple[int, int], ...]

    @property
    def value(self) -> int:
        return prod(p**e for p, e in self.factors)

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.factors)


_SMALL_PRIMES: List[int] = []


def _small_primes(limit: int = 1000) -> List[int]:
    if not _SMALL_PRIMES:
        sieve = bytearray([1]) * (limit + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, isqrt(limit) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
        _SMALL_PRIMES.extend(i for i, flag in enumerate(sieve) if flag)
    return _SMALL_PRIMES


def factorize(n: int, bound: int | None = None) -> Factorization:
    """Trial-division factorization, refusing inputs above the desk-scale bound."""
    if n < 1:
        raise ValueError("factorize needs a positive integer")
    bound = get_limits().factor_bound if bound is None else bound
    if n > bound:
        raise BoundExceeded(f"{n} exceeds the factorization bound {bound}")
    out = []
    for p in _small_primes():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    f = _small_primes()[-1] + 2
    while f * f <= n:
        if n % f == 0:
            e = 0
            while n % f == 0:
                n //= f
                e += 1
            out.append((f, e))
        f += 2
    if n > 1:
        out.append((n, 1))
    return Factorization(tuple(out))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _small_primes():
        if p * p > n:
            return True
        if n % p == 0:
            return n == p
    return factorize(n).factors == ((n, 1),)


def primes_from(start: int = 2) -> Iterator[int]:
    n = max(2, start)
    while True:
        if is_prime(n):
            yield n
        n += 1


def divisors(n: int) -> List[int]:
    divs = [1]
    for p, e in factorize(n).factors:
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def euler_phi(n: int) -> int:
    return reduce(lambda acc, pe: acc * (pe[0] - 1) * pe[0] ** (pe[1] - 1), factorize(n).factors, 1)
