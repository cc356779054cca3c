"""Exact integer linear algebra: Smith normal form, unimodular completion,
moment-curve haystacks and their annihilators, multiplicative complexity."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, gcd, lcm
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _exact
from .errors import BoundExceeded, InvariantViolation, get_limits
from .intpoly import IntPolynomialMap
from .modular import TorusRational

Matrix = List[List[int]]


@dataclass(frozen=True)
class SmithDecomposition:
    """B = L @ D @ R with L, R unimodular and D diagonal (D_1 | D_2 | ...)."""

    L: Matrix
    D: Matrix
    R: Matrix

    @property
    def invariant_factors(self) -> List[int]:
        n = min(len(self.D), len(self.D[0]) if self.D else 0)
        return [self.D[i][i] for i in range(n) if self.D[i][i] != 0]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    def product(self) -> Matrix:
        return _exact.matmul(_exact.matmul(self.L, self.D), self.R)

    def to_json(self) -> dict:
        return {"L": self.L, "D": self.D, "R": self.R, "invariant_factors": self.invariant_factors}


def smith_normal_form(B: Sequence[Sequence[int]]) -> SmithDecomposition:
    """Smith normal form by repeated gcd reduction, tracking both transforms."""
    D = [list(map(int, row)) for row in B]
    m = len(D)
    n = len(D[0]) if m else 0
    if m == 0 or n == 0 or any(len(row) != n for row in D):
        raise ValueError("smith_normal_form needs a nonempty rectangular matrix")
    L = _exact.identity(m)
    R = _exact.identity(n)

    # Row operations on D are undone on the columns of L, column operations
    # on the rows of R, so that L @ D @ R stays equal to B throughout.
    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        for row in L:
            row[i], row[j] = row[j], row[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        R[i], R[j] = R[j], R[i]

    def add_row(i, j, c):  # row_i += c * row_j
        D[i] = [a + c * b for a, b in zip(D[i], D[j])]
        for row in L:
            row[j] -= c * row[i]

    def add_col(i, j, c):  # col_i += c * col_j
        for row in D:
            row[i] += c * row[j]
        R[j] = [a - c * b for a, b in zip(R[j], R[i])]

    def negate_row(i):
        D[i] = [-a for a in D[i]]
        for row in L:
            row[i] = -row[i]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return SmithDecomposition(L, D, R)
            if best[0] != t:
                swap_rows(t, best[0])
            if best[1] != t:
                swap_cols(t, best[1])
            p = D[t][t]
            clean = True
            for i in range(t + 1, m):
                q = D[i][t] // p
                if q:
                    add_row(i, t, -q)
                clean = clean and D[i][t] == 0
            for j in range(t + 1, n):
                q = D[t][j] // p
                if q:
                    add_col(j, t, -q)
                clean = clean and D[t][j] == 0
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if D[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if D[t][t] < 0:
            negate_row(t)
    return SmithDecomposition(L, D, R)


def complete_primitive_to_unimodular(v: Sequence[int], d: Optional[int] = None) -> Matrix:
    """A d x d integer matrix with first row v and determinant exactly 1."""
    v = [int(x) for x in v]
    d = len(v) if d is None else d
    if len(v) != d:
        raise ValueError("vector length differs from the dimension")
    g = 0
    for x in v:
        g = gcd(g, x)
    if g != 1:
        raise ValueError(f"{v} is not primitive")
    if d == 1:
        if v[0] != 1:
            raise ValueError("(-1) has no determinant-1 completion in dimension 1")
        return [[1]]
    snf = smith_normal_form([v])
    # v = L[0][0] * (first row of R), and L[0][0] = +-1.
    rows = [list(r) for r in snf.R]
    if snf.L[0][0] == -1:
        rows[0] = [-x for x in rows[0]]
    if rows[0] != v:
        raise InvariantViolation("unimodular completion lost the first row")
    if _exact.det(rows) == -1:
        rows[1] = [-x for x in rows[1]]
    lead = next(j for j, x in enumerate(v) if x)
    for i in range(1, d):
        c = rows[i][lead] // v[lead]
        rows[i] = [a - c * b for a, b in zip(rows[i], v)]
    if _exact.det(rows) != 1:
        raise InvariantViolation("unimodular completion has determinant != 1")
    return rows


# haystacks -----------------------------------------------------------------


@dataclass(frozen=True)
class Haystack:
    """Moment-curve vectors (1, t, ..., t^(d-1)), t = 1, 2, ...

    Any d of them form a Vandermonde matrix with distinct nodes, hence are
    linearly independent; the leading 1 makes each one primitive.
    """

    dimension: int

    def vector(self, t: int) -> Tuple[int, ...]:
        if t < 1:
            raise ValueError("haystack parameters start at 1")
        return tuple(t**i for i in range(self.dimension))

    def window(self, M: int) -> List[Tuple[int, ...]]:
        return haystack_window(self.dimension, M)


def in_haystack_window(v: Sequence[int], M: int) -> bool:
    """Whether ||v||_inf <= (M / d!)^(1/d), decided in integers."""
    d = len(v)
    return max(abs(x) for x in v) ** d * factorial(d) <= M


def haystack_window(d: int, M: int) -> List[Tuple[int, ...]]:
    if d < 2 or M < 1:
        raise ValueError("haystack_window needs d >= 2 and M >= 1")
    out = []
    t = 1
    while True:
        v = tuple(t**i for i in range(d))
        if not in_haystack_window(v, M):
            return out
        out.append(v)
        t += 1


def joint_annihilator(vectors: Sequence[Sequence[int]], grid: Sequence[int]) -> List[TorusRational]:
    """Points alpha of prod (1/g_i)Z/Z with v . alpha = 0 mod 1 for every v."""
    d = len(grid)
    if any(len(v) != d for v in vectors):
        raise ValueError("vector dimension differs from grid dimension")
    size = int(np.prod(grid))
    if size > get_limits().state_bound:
        raise BoundExceeded(f"grid of {size} points exceeds the state bound")
    G = lcm(*grid)
    idx = np.indices(tuple(grid)).reshape(d, -1).T.astype(np.int64)
    nums = idx * np.array([G // g for g in grid], dtype=np.int64)
    keep = np.ones(len(nums), dtype=bool)
    for v in vectors:
        keep &= (nums @ np.array(v, dtype=np.int64)) % G == 0
    return [TorusRational(tuple(Fraction(int(x), G) for x in row)) for row in nums[keep]]


def annihilator_in_rat(vectors: Sequence[Sequence[int]], grid: Sequence[int], M: int) -> List[TorusRational]:
    """Joint annihilator of d distinct vectors from H_M on the grid.

    Every point must have denom <= |det| <= M; a failure is reported as an
    invariant violation since it cannot happen for a valid input.
    """
    d = len(grid)
    vectors = [tuple(int(x) for x in v) for v in vectors]
    if len(vectors) != d or len(set(vectors)) != d:
        raise ValueError(f"need {d} distinct vectors")
    for v in vectors:
        if not in_haystack_window(v, M):
            raise ValueError(f"{v} is not in H_{M}")
    D = abs(_exact.det(vectors))
    if D == 0:
        raise ValueError("vectors are not linearly independent")
    points = joint_annihilator(vectors, grid)
    for p in points:
        if not p.is_zero and (p.denom > M or D % p.denom):
            raise InvariantViolation(f"annihilator point {p} has denom {p.denom}, |det| = {D}, M = {M}")
    return points


# multiplicative complexity ------------------------------------------------


def coefficient_block(P: IntPolynomialMap) -> Matrix:
    """D x d matrix whose column i holds the coefficients of n^1..n^D in P_i."""
    if P.arity != 1:
        raise ValueError("multiplicative complexity is defined for arity-1 maps")
    D = P.degree
    return [[comp.get((j,), 0) for comp in P.components] for j in range(1, D + 1)]


def _gcd_all(values) -> int:
    g = 0
    for x in values:
        g = gcd(g, int(x))
    return g


def complexity_gcd(P: IntPolynomialMap, a: Sequence[int], q: int) -> int:
    """gcd(b_1, ..., b_D, q) where sum b_j n^j = (P(n) - P(0)) . a."""
    B = coefficient_block(P)
    b = [sum(row[i] * a[i] for i in range(len(a))) for row in B]
    return _gcd_all(b + [q])


def _random_coprime_pair(rng: random.Random, d: int, q_max: int) -> Tuple[List[int], int]:
    while True:
        q = rng.randint(1, q_max)
        a = [rng.randint(-q_max, q_max) for _ in range(d)]
        if _gcd_all(a + [q]) == 1:
            return a, q


def multiplicative_complexity_bound(
    P: IntPolynomialMap, trials: int = 100, seed: int = 0, q_max: int = 1000
) -> int:
    """Largest invariant factor of the coefficient block of P - P(0).

    The returned Q bounds gcd(b, q) for every coprime (a, q); the bound is
    spot-checked on ``trials`` random pairs before being returned.
    """
    B = coefficient_block(P)
    d = P.dimension
    if d > P.degree:
        raise ValueError("need d <= deg(P)")
    snf = smith_normal_form(B)
    if snf.rank != d:
        raise ValueError("components of P - P(0) are linearly dependent")
    Q = snf.invariant_factors[-1]
    rng = random.Random(seed)
    for _ in range(trials):
        a, q = _random_coprime_pair(rng, d, q_max)
        g = complexity_gcd(P, a, q)
        if g > Q:
            raise InvariantViolation(f"gcd {g} exceeds bound {Q} at a={a}, q={q}")
    return Q


def smallest_factor_counterexample(P: IntPolynomialMap, q_max: int = 60, a_max: int = 6):
    """Search for coprime (a, q) with gcd(b, q) above the smallest invariant factor.

    Returns (a, q, gcd, D_1) or None if the box contains no such pair.
    """
    import itertools

    B = coefficient_block(P)
    d = P.dimension
    snf = smith_normal_form(B)
    if snf.rank != d:
        raise ValueError("components of P - P(0) are linearly dependent")
    d1 = snf.invariant_factors[0]
    for q in range(1, q_max + 1):
        for a in itertools.product(range(-a_max, a_max + 1), repeat=d):
            if _gcd_all(list(a) + [q]) != 1:
                continue
            g = complexity_gcd(P, a, q)
            if g > d1:
                return list(a), q, g, d1
    return None
