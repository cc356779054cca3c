"""Polynomial value sets modulo primes and squarefree moduli, and the
square-free counterexample system built from deficient primes."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, prod
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundExceeded, InvariantViolation, get_limits
from .intpoly import IntPolynomialMap
from .modular import crt_combine, factorize, is_prime, primes_from

RLE_THRESHOLD = 10**4


@dataclass(frozen=True)
class ValueSet:
    modulus: int
    residues: Tuple[int, ...]

    def __post_init__(self):
        res = tuple(sorted(set(int(r) for r in self.residues)))
        if not res:
            raise ValueError("a value set is never empty")
        if res[0] < 0 or res[-1] >= self.modulus:
            raise ValueError("residues must lie in [0, modulus)")
        object.__setattr__(self, "residues", res)

    def __len__(self):
        return len(self.residues)

    def __contains__(self, r):
        return r % self.modulus in set(self.residues)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.residues), self.modulus)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.modulus, dtype=bool)
        m[list(self.residues)] = True
        return m

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "size": len(self), "residues": encode_residues(self.residues)}


def encode_residues(residues: Sequence[int]):
    """Plain list, or {"runs": [[start, length], ...]} above the RLE threshold."""
    residues = sorted(residues)
    if len(residues) <= RLE_THRESHOLD:
        return list(residues)
    runs: List[List[int]] = []
    for r in residues:
        if runs and runs[-1][0] + runs[-1][1] == r:
            runs[-1][1] += 1
        else:
            runs.append([r, 1])
    return {"runs": runs}


def decode_residues(data) -> List[int]:
    if isinstance(data, dict):
        return [s + i for s, n in data["runs"] for i in range(n)]
    return list(data)


def _require_univariate(P: IntPolynomialMap) -> None:
    if P.arity != 1 or P.dimension != 1:
        raise ValueError("value sets need a single-output polynomial in one variable")


def _image(P: IntPolynomialMap, q: int) -> np.ndarray:
    vals = P.evaluate_mod_many(np.arange(q, dtype=np.int64).reshape(-1, 1), q)[:, 0]
    return np.unique(vals)


def value_set_mod_prime(P: IntPolynomialMap, p: int) -> ValueSet:
    _require_univariate(P)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return ValueSet(p, tuple(int(v) for v in _image(P, p)))


def find_deficient_primes(P: IntPolynomialMap, count: int, scan_bound: int = 10**4) -> Tuple[Fraction, List[int]]:
    """The first ``count`` primes p <= scan_bound with |V(P,p)| < p.

    Also returns lam = 1 - 1/(2 deg P); every returned prime is checked to
    satisfy |V(P,p)| <= lam * p.
    """
    _require_univariate(P)
    if P.degree < 2:
        raise ValueError("deficient primes need deg P >= 2")
    if count < 1:
        raise ValueError("count must be positive")
    lam = 1 - Fraction(1, 2 * P.degree)
    found: List[int] = []
    for p in primes_from(2):
        if p > scan_bound:
            raise ValueError(f"only {len(found)} deficient primes below {scan_bound}; raise the scan bound")
        size = len(_image(P, p))
        if size < p:
            if size > lam * p:
                raise InvariantViolation(f"|V(P,{p})| = {size} exceeds {lam} * {p}")
            found.append(p)
            if len(found) == count:
                return lam, found
    raise AssertionError("unreachable")


def value_set_mod_squarefree(P: IntPolynomialMap, q: int) -> ValueSet:
    """S(q) assembled from the prime value sets by the Chinese remainder theorem."""
    _require_univariate(P)
    fac = factorize(q)
    if not fac.is_squarefree:
        raise ValueError(f"{q} is not squarefree")
    if q == 1:
        return ValueSet(1, (0,))
    acc = np.zeros(1, dtype=np.int64)
    expected = 1
    for p in fac.primes:
        vp = np.array(value_set_mod_prime(P, p).residues, dtype=np.int64)
        expected *= len(vp)
        # idempotent e_p: 1 mod p, 0 mod the other prime factors
        e, _ = crt_combine([1 if r == p else 0 for r in fac.primes], list(fac.primes))
        acc = ((acc[:, None] + (vp[None, :] * e) % q) % q).ravel()
    out = np.unique(acc)
    if len(out) != expected:
        raise InvariantViolation("CRT combination is not injective")
    if q <= 10**4 and not np.array_equal(out, _image(P, q)):
        raise InvariantViolation(f"CRT value set disagrees with direct enumeration mod {q}")
    return ValueSet(q, tuple(int(v) for v in out))


@dataclass(frozen=True)
class CounterexampleBlueprint:
    """Levels Z/q_i with A_i = Z/q_i minus -S(q_i), so that no polynomial
    translate of A_i ever meets the residue 0."""

    polynomial: IntPolynomialMap
    depth: int
    primes: Tuple[int, ...]
    moduli: Tuple[int, ...]
    value_sets: Tuple[ValueSet, ...]
    sets: Tuple[Tuple[int, ...], ...]
    lam: Fraction
    tight_lam: Optional[Fraction] = None
    witnesses: Tuple[dict, ...] = field(default=(), compare=False)

    @property
    def period(self) -> int:
        return prod(self.moduli)

    def level_density(self, i: int) -> Fraction:
        return Fraction(len(self.sets[i]), self.moduli[i])

    @property
    def density(self) -> Fraction:
        return prod((self.level_density(i) for i in range(self.depth)), start=Fraction(1))

    def level_mask(self, i: int) -> np.ndarray:
        m = np.zeros(self.moduli[i], dtype=bool)
        m[list(self.sets[i])] = True
        return m

    def orbit_union_level(self, i: int) -> np.ndarray:
        """Mask of A_i + S(q_i), the polynomial orbit union at level i."""
        return cyclic_sumset(self.level_mask(i), self.value_sets[i].mask())

    def verify(self) -> None:
        q = self.moduli
        for a, b in zip(q, q[1:]):
            if gcd(a, b) != 1:
                raise InvariantViolation("moduli are not pairwise coprime")
        for i in range(self.depth):
            qi, S, A = q[i], self.value_sets[i], set(self.sets[i])
            if not factorize(qi).is_squarefree:
                raise InvariantViolation(f"q_{i+1} = {qi} is not squarefree")
            level = i + 1
            for lam in (self.lam, self.tight_lam):
                if lam is None:
                    continue
                if S.density > lam**level:
                    raise InvariantViolation(f"|S(q_{level})|/q_{level} exceeds {lam}^{level}")
                if not (1 - lam**level <= self.level_density(i) < 1):
                    raise InvariantViolation(f"density of A_{level} outside [1 - {lam}^{level}, 1)")
            if any((-s) % qi in A for s in S.residues):
                raise InvariantViolation(f"0 lies in A_{level} + S(q_{level})")
            if self.orbit_union_level(i)[0]:
                raise InvariantViolation(f"sumset check: 0 in A_{level} + S(q_{level})")

    def to_json(self) -> dict:
        return {
            "polynomial": self.polynomial.to_text(),
            "depth": self.depth,
            "primes": list(self.primes),
            "moduli": list(self.moduli),
            "lambda": str(self.lam),
            "tight_lambda": None if self.tight_lam is None else str(self.tight_lam),
            "levels": [
                {
                    "modulus": self.moduli[i],
                    "value_set": encode_residues(self.value_sets[i].residues),
                    "value_set_size": len(self.value_sets[i]),
                    "A": encode_residues(self.sets[i]),
                    "A_size": len(self.sets[i]),
                    "A_density": str(self.level_density(i)),
                }
                for i in range(self.depth)
            ],
        }


def cyclic_sumset(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Mask of {x + y mod q} for masks a, b over Z/q, by FFT convolution."""
    q = len(a)
    if len(b) != q:
        raise ValueError("masks over different moduli")
    conv = np.fft.irfft(np.fft.rfft(a.astype(float)) * np.fft.rfft(b.astype(float)), n=q)
    return conv > 0.5


def build_counterexample(P: IntPolynomialMap, depth: int, scan_bound: int = 10**4) -> CounterexampleBlueprint:
    _require_univariate(P)
    if P.degree < 2:
        raise ValueError("the construction needs deg P >= 2")
    if not P.has_zero_constant_term:
        raise ValueError("the construction needs P(0) = 0")
    if depth < 1:
        raise ValueError("depth must be positive")
    lam, primes = find_deficient_primes(P, depth * (depth + 1) // 2, scan_bound)
    moduli, groups = [], []
    pos = 0
    for i in range(1, depth + 1):
        group = primes[pos : pos + i]
        pos += i
        groups.append(tuple(group))
        moduli.append(prod(group))
    bound = get_limits().modulus_bound
    if moduli[-1] > bound:
        raise BoundExceeded(f"q_{depth} = {moduli[-1]} exceeds the modulus bound {bound}")
    value_sets, sets = [], []
    for qi in moduli:
        S = value_set_mod_squarefree(P, qi)
        neg = {(-s) % qi for s in S.residues}
        value_sets.append(S)
        sets.append(tuple(r for r in range(qi) if r not in neg))
    tight = None
    if P.degree == 2:
        tight = Fraction(2, 3)
        if any(len(value_set_mod_prime(P, p)) > tight * p for p in primes):
            tight = None
    bp = CounterexampleBlueprint(P, depth, tuple(primes), tuple(moduli), tuple(value_sets), tuple(sets), lam, tight)
    bp.verify()
    return bp


class NoCoprimeLevel(ValueError):
    """No level modulus of the blueprint is coprime to the step k."""


@dataclass(frozen=True)
class ProgressionBound:
    level: int  # 1-based
    k: int
    m: int
    start: int  # a residue where a longest run begins
    blocked: int  # a residue outside A_i + S(q_i)

    def to_json(self) -> dict:
        return {"level": self.level, "k": self.k, "m": self.m, "run_start": self.start, "blocked_residue": self.blocked}


def max_progression_length(bp: CounterexampleBlueprint, k: int) -> ProgressionBound:
    """Longest run a, a+k, ..., a+(m-1)k inside A_i + S(q_i) at the first level
    with gcd(k, q_i) = 1."""
    if k < 1:
        raise ValueError("k must be positive")
    level = next((i for i, q in enumerate(bp.moduli) if gcd(k, q) == 1), None)
    if level is None:
        raise NoCoprimeLevel(f"no level modulus in {bp.moduli} is coprime to {k}; increase the depth")
    q = bp.moduli[level]
    union = bp.orbit_union_level(level)
    outside = np.flatnonzero(~union)
    if len(outside) == 0:
        raise InvariantViolation("orbit union covers the whole level")
    b = int(outside[0])
    # k generates Z/q, so this visits every residue except b exactly once
    walk = (b + k + k * np.arange(q - 1, dtype=np.int64)) % q
    inside = union[walk]
    best, best_start, run, run_start = 0, b, 0, 0
    for t, flag in enumerate(inside):
        if flag:
            if run == 0:
                run_start = t
            run += 1
            if run > best:
                best, best_start = run, int(walk[run_start])
        else:
            run = 0
    return ProgressionBound(level + 1, k, best, best_start, b)


def default_base_point(bp: CounterexampleBlueprint) -> Tuple[int, ...]:
    return tuple(min(A) for A in bp.sets)


def return_time_set(bp: CounterexampleBlueprint, x: Optional[Sequence[int]] = None, window: Optional[Tuple[int, int]] = None):
    """E_x = {n in window : x_i + n mod q_i in A_i for every level i}."""
    from .combinatorics import WindowedSet

    x = default_base_point(bp) if x is None else tuple(int(v) for v in x)
    if len(x) != bp.depth:
        raise ValueError("base point needs one residue per level")
    lo, hi = (0, bp.period) if window is None else window
    if hi - lo > get_limits().state_bound:
        raise BoundExceeded(f"window of length {hi - lo} exceeds the state bound")
    n = np.arange(lo, hi, dtype=np.int64)
    keep = np.ones(len(n), dtype=bool)
    for i in range(bp.depth):
        keep &= bp.level_mask(i)[(x[i] + n) % bp.moduli[i]]
    return WindowedSet((lo,), (hi,), keep, period=bp.period)
