"""Windowed combinatorial verifiers on finite pieces of Z^d."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd, prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundExceeded, InvariantViolation, get_limits
from .intpoly import IntPolynomialMap

Point = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class WindowedSet:
    """Members of the box prod [lo_i, hi_i) stored as a boolean mask.

    ``period`` marks a 1-d set known to be periodic with that period; the
    window then holds whole periods of it.
    """

    lo: Point
    hi: Point
    mask: np.ndarray
    period: Optional[int] = None

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("window bounds need matching nonzero dimension")
        shape = tuple(h - l for l, h in zip(lo, hi))
        if any(s < 0 for s in shape):
            raise ValueError("empty-or-inverted window")
        mask = np.asarray(self.mask, dtype=bool).reshape(shape)
        if self.period is not None and len(lo) != 1:
            raise ValueError("periodic sets are one-dimensional")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_points(cls, points, lo: Sequence[int], hi: Sequence[int], period: Optional[int] = None) -> "WindowedSet":
        lo, hi = tuple(lo), tuple(hi)
        mask = np.zeros(tuple(h - l for l, h in zip(lo, hi)), dtype=bool)
        for p in points:
            p = (p,) if isinstance(p, (int, np.integer)) else tuple(p)
            idx = tuple(int(v) - l for v, l in zip(p, lo))
            if len(p) != len(lo) or any(not 0 <= i < s for i, s in zip(idx, mask.shape)):
                raise ValueError(f"{p} lies outside the window")
            mask[idx] = True
        return cls(lo, hi, mask, period)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.mask.shape

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __len__(self):
        return self.size

    @property
    def density(self) -> Fraction:
        return Fraction(self.size, max(1, self.mask.size))

    def points(self) -> np.ndarray:
        """Members as an (N, d) int64 array in lexicographic order."""
        return np.argwhere(self.mask).astype(np.int64) + np.array(self.lo, dtype=np.int64)

    @property
    def members(self) -> List[Point]:
        return [tuple(int(v) for v in p) for p in self.points()]

    def values(self) -> List[int]:
        if self.dimension != 1:
            raise ValueError("values() is for one-dimensional sets")
        return [int(v) for v in self.points()[:, 0]]

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, self.dimension)
        idx = pts - np.array(self.lo, dtype=np.int64)
        ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        out[ok] = self.mask[tuple(idx[ok].T)]
        return out

    def __contains__(self, p) -> bool:
        p = (p,) if isinstance(p, (int, np.integer)) else tuple(p)
        return bool(self.contains_many(np.array([p]))[0])

    def to_json(self) -> dict:
        flat = self.mask.ravel()
        runs: List[List[int]] = []
        start = None
        for i, flag in enumerate(flat):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                runs.append([start, i - start])
                start = None
        if start is not None:
            runs.append([start, len(flat) - start])
        return {
            "dimension": self.dimension,
            "window": {"lo": list(self.lo), "hi": list(self.hi)},
            "period": self.period,
            "size": self.size,
            "density": str(self.density),
            "runs": runs,
        }

    @classmethod
    def from_json(cls, data: dict) -> "WindowedSet":
        lo, hi = tuple(data["window"]["lo"]), tuple(data["window"]["hi"])
        flat = np.zeros(prod(h - l for l, h in zip(lo, hi)), dtype=bool)
        for s, n in data["runs"]:
            flat[s : s + n] = True
        return cls(lo, hi, flat, data.get("period"))


def interval_set(lo: int, hi: int, step: int = 1, offset: Optional[int] = None) -> WindowedSet:
    """The progression {offset + step * t} intersected with [lo, hi)."""
    offset = lo if offset is None else offset
    n = np.arange(lo, hi)
    return WindowedSet((lo,), (hi,), (n - offset) % step == 0)


def grid_set(lo: Sequence[int], hi: Sequence[int]) -> WindowedSet:
    shape = tuple(h - l for l, h in zip(lo, hi))
    return WindowedSet(tuple(lo), tuple(hi), np.ones(shape, dtype=bool))


def difference_set(E: WindowedSet) -> WindowedSet:
    """{a - b : a, b in E}, on the window (-(w-1), w-1) per axis."""
    w = np.array(E.shape)
    size = tuple(2 * w - 1)
    if E.size == 0:
        return WindowedSet(tuple(1 - w), tuple(w), np.zeros(size, dtype=bool))
    axes = tuple(range(len(size)))
    f = np.fft.rfftn(E.mask.astype(float), s=size, axes=axes)
    flipped = E.mask[tuple(slice(None, None, -1) for _ in w)].astype(float)
    g = np.fft.rfftn(flipped, s=size, axes=axes)
    corr = np.fft.irfftn(f * g, s=size, axes=axes) > 0.5
    # corr[i] counts pairs with a - b = i - (w - 1)
    return WindowedSet(tuple(1 - w), tuple(w), corr)


# Bogolyubov coverage ---------------------------------------------------------


@dataclass
class BogolyubovReport:
    """Outcome of a windowed search for k Z^d inside E-E + P(E-E).

    ``status`` is "evidence" when some k passed every tested point (a
    finite check, not a proof), "refuted" when every k <= k_max has an
    explicit uncovered point.  Refutations are exact for the finite set E.
    """

    k: Optional[int]
    status: str
    k_max: int
    test_radius: int
    uncovered: Dict[int, Point] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "status": self.status,
            "k_max": self.k_max,
            "test_radius": self.test_radius,
            "uncovered": {str(k): list(p) for k, p in sorted(self.uncovered.items())},
        }


def _check_square_map(P: IntPolynomialMap, d: int) -> None:
    if P.arity != d or P.dimension != d:
        raise ValueError(f"P must map Z^{d} to Z^{d}")
    if not P.has_zero_constant_term:
        raise ValueError("P must have zero constant term")


def _covered(D: WindowedSet, PD: np.ndarray, t: np.ndarray) -> bool:
    """Whether t - P(u) lies in D for some u in D; PD holds the values P(u)."""
    return bool(D.contains_many(t[None, :] - PD).any())


def bogolyubov_min_k(E: WindowedSet, P: IntPolynomialMap, k_max: int, test_radius: int) -> BogolyubovReport:
    d = E.dimension
    _check_square_map(P, d)
    if k_max < 1 or test_radius < 0:
        raise ValueError("k_max must be positive and test_radius nonnegative")
    width = min(E.shape)
    if k_max * test_radius >= width:
        raise ValueError(f"k_max * test_radius = {k_max * test_radius} does not fit the window width {width}")
    D = difference_set(E)
    U = D.points()
    PD = np.array([P.evaluate(u) for u in U], dtype=np.int64).reshape(-1, d)
    offsets = np.array(list(itertools.product(range(-test_radius, test_radius + 1), repeat=d)), dtype=np.int64)
    report = BogolyubovReport(None, "refuted", k_max, test_radius)
    for k in range(1, k_max + 1):
        miss = next((k * m for m in offsets if not _covered(D, PD, k * m)), None)
        if miss is None:
            report.k, report.status = k, "evidence"
            return report
        report.uncovered[k] = tuple(int(v) for v in miss)
    return report


# volume spectrum -------------------------------------------------------------


def _det_many(M: np.ndarray) -> np.ndarray:
    """Exact integer determinants of a stack of d x d int64 matrices (Leibniz)."""
    n, d, _ = M.shape
    out = np.zeros(n, dtype=np.int64)
    for perm in itertools.permutations(range(d)):
        inversions = sum(1 for i in range(d) for j in range(i + 1, d) if perm[i] > perm[j])
        term = np.ones(n, dtype=np.int64)
        for i, j in enumerate(perm):
            term = term * M[:, i, j]
        out += -term if inversions % 2 else term
    return out


def volspec(E: WindowedSet, cap: Optional[int] = None, chunk: int = 200_000) -> set:
    """d!-scaled signed simplex volumes det(l_1 - l_0, ..., l_d - l_0), l_i in E.

    Only unordered (d+1)-subsets are enumerated; reordering vertices only
    flips the sign, so each value is added together with its negation.
    Returns the empty set when |E| < d+1.
    """
    d = E.dimension
    pts = E.points()
    n = len(pts)
    if n < d + 1:
        return set()
    from math import comb

    total = comb(n, d + 1)
    cap = get_limits().enum_bound if cap is None else cap
    if total > cap:
        raise BoundExceeded(f"{total} vertex tuples exceed the cap {cap}")
    span = int(np.max(np.abs(pts - pts.min(axis=0)))) if n else 0
    if factorial(d) * max(span, 1) ** d >= 2**62:
        raise BoundExceeded("determinants could overflow int64")
    values = {0}  # repeated vertices are allowed and give 0
    combos = itertools.combinations(range(n), d + 1)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        V = pts[block]  # (c, d+1, d)
        dets = _det_many(V[:, 1:, :] - V[:, :1, :])
        u = np.unique(dets)
        values.update(int(x) for x in u)
        values.update(int(-x) for x in u)
    return values


def volspec_coverage(E: WindowedSet, k: int, bound: int, spectrum: Optional[set] = None) -> bool:
    """Whether every volume k*j, |j| <= bound, is a simplex volume with vertices in E."""
    spectrum = volspec(E) if spectrum is None else spectrum
    scale = factorial(E.dimension) * k
    return all(scale * j in spectrum for j in range(-bound, bound + 1))


# Bohr sets -------------------------------------------------------------------


def torus_norm(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer."""
    r = Fraction(x) % 1
    return min(r, 1 - r)


def bohr_set(alpha: Fraction, eps: Fraction, window: Tuple[int, int]) -> WindowedSet:
    """{n in window : ||n alpha|| < eps}, decided exactly for rational alpha.

    Any eps >= 1/2 returns the whole window.
    """
    alpha, eps = Fraction(alpha), Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    lo, hi = window
    if eps >= Fraction(1, 2):
        return WindowedSet((lo,), (hi,), np.ones(hi - lo, dtype=bool))
    mask = [torus_norm(n * alpha) < eps for n in range(lo, hi)]
    return WindowedSet((lo,), (hi,), np.array(mask, dtype=bool))


def product_set(factors: Sequence[WindowedSet]) -> WindowedSet:
    mask = factors[0].mask
    for f in factors[1:]:
        mask = np.logical_and.outer(mask, f.mask)
    return WindowedSet(tuple(f.lo[0] for f in factors), tuple(f.hi[0] for f in factors), mask)


@dataclass
class DegenerateCoverageReport:
    alpha: List[int]
    beta: List[int]
    a: Fraction
    eps: Fraction
    fat_radius: Fraction
    sum_points_checked: int
    bogolyubov: BogolyubovReport

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "a": str(self.a),
            "eps": str(self.eps),
            "fat_radius": str(self.fat_radius),
            "sum_points_checked": self.sum_points_checked,
            "all_inside_fat_bohr_set": True,
            "bogolyubov": self.bogolyubov.to_json(),
        }


def appendix_necessity_check(
    P: IntPolynomialMap,
    a: Fraction,
    eps: Fraction,
    window: Tuple[int, int],
    k_max: int,
    test_radius: int,
) -> DegenerateCoverageReport:
    """Coverage obstruction for maps with sum alpha_i P_i = sum beta_j x_j.

    With E = B(a, eps)^d in the window, every x + P(y) with x, y in E - E has
    alpha . (x + P(y)) = alpha . x + beta . y, which lies in the Bohr set of
    radius 2 eps sum(|alpha_i| + |beta_i|).  That is checked exactly for all
    windowed sum points, followed by the windowed coverage search.
    """
    combo = P.linear_degenerate_combination()
    if combo is None:
        raise ValueError("P has no linear degenerate combination")
    alpha, beta = combo
    d = P.arity
    _check_square_map(P, d)
    a, eps = Fraction(a), Fraction(eps)
    E = product_set([bohr_set(a, eps, window)] * d)
    D = difference_set(E).points()
    radius = 2 * eps * sum(abs(x) + abs(y) for x, y in zip(alpha, beta))
    al = np.array(alpha, dtype=object)
    be = np.array(beta, dtype=object)
    checked = 0
    for y in D:
        y = tuple(int(v) for v in y)
        Py = P.evaluate(y)
        if sum(x * p for x, p in zip(alpha, Py)) != sum(b * v for b, v in zip(beta, y)):
            raise InvariantViolation("degenerate combination identity failed")
        by = int(np.dot(be, y))
        for x in D:
            n = int(np.dot(al, x)) + by
            if not torus_norm(n * a) < radius:
                raise InvariantViolation(f"sum point {tuple(x)} + P{y} leaves the fat Bohr set")
            checked += 1
    report = bogolyubov_min_k(E, P, k_max, test_radius)
    return DegenerateCoverageReport(list(alpha), list(beta), a, eps, radius, checked, report)


# pinned patterns -------------------------------------------------------------


def _steps_to_miss(mask: np.ndarray, k: int) -> np.ndarray:
    """For each residue r mod q, the least t >= 1 with r + t k outside ``mask``.

    Residues whose whole k-cycle lies inside the mask get a value above q.
    """
    q = len(mask)
    g = gcd(k, q)
    L = q // g
    out = np.full(q, q + 1, dtype=np.int64)
    t = np.arange(2 * L, dtype=np.int64)
    for c in range(g):
        cycle = (c + k * t) % q  # two laps around the cycle through c
        misses = np.flatnonzero(~mask[cycle])
        if len(misses) == 0:
            continue
        first = t[:L] + 1
        pos = np.searchsorted(misses, first)
        out[cycle[:L]] = misses[pos] - t[:L]
    return out


class InsufficientMargin(ValueError):
    """The window cannot decide membership for the requested pattern."""


@dataclass
class PinnedCertificate:
    """Result of testing {k, 2k, ..., mk} against every pinned pair.

    ``first_fail[i, j]`` is the smallest t in 1..m with t*k not in
    (E - x_i) + P(E - y_j), or 0 when the pair covers the whole pattern.
    Pairs are indexed by the residues ``base`` (mod ``modulus``) for a
    periodic E, or by members of E otherwise.
    """

    k: int
    m: int
    modulus: Optional[int]
    base: np.ndarray
    first_fail: np.ndarray

    @property
    def refuted(self) -> bool:
        return self.m > 0 and bool((self.first_fail > 0).all())

    @property
    def m_prime(self) -> Optional[int]:
        """Smallest m' such that {k, ..., m'k} fails for every pair."""
        return int(self.first_fail.max()) if self.refuted else None

    @property
    def covering_pair(self) -> Optional[Tuple[int, int]]:
        if self.refuted:
            return None
        if self.first_fail.size == 0:
            return None
        i, j = np.argwhere(self.first_fail == 0)[0]
        return int(self.base[i]), int(self.base[j])

    def witness(self, x: int, y: int) -> int:
        """A multiple t*k not attained from the pinned pair (x, y)."""
        if self.modulus is not None:
            x, y = x % self.modulus, y % self.modulus
        i = int(np.searchsorted(self.base, x))
        j = int(np.searchsorted(self.base, y))
        if i >= len(self.base) or self.base[i] != x or j >= len(self.base) or self.base[j] != y:
            raise ValueError("pair is not pinned in E")
        t = int(self.first_fail[i, j])
        if t == 0:
            raise ValueError("this pair covers the pattern")
        return t * self.k

    def to_json(self) -> dict:
        ff = self.first_fail
        hist = {str(int(t)): int(c) for t, c in zip(*np.unique(ff, return_counts=True))}
        return {
            "k": self.k,
            "m": self.m,
            "modulus": self.modulus,
            "pairs_checked": int(ff.size),
            "refuted": self.refuted,
            "m_prime": self.m_prime,
            "first_fail_histogram": hist,
            "covering_pair": None if self.covering_pair is None else list(self.covering_pair),
        }


def pinned_delta_refuter(
    E: WindowedSet,
    P: IntPolynomialMap,
    k: int,
    m: int,
    modulus: Optional[int] = None,
    finite: bool = False,
) -> PinnedCertificate:
    """Test whether {k, ..., mk} fits in (E - x) + P(E - y) for pinned x, y in E.

    For a periodic E the test runs modulo ``modulus`` (default: the period,
    any divisor of it is allowed).  Reducing modulo a divisor can only
    enlarge the set of attainable residues, so a failure found there is a
    genuine failure for the integer set; with the full period the test is
    exact.  A non-periodic E is only accepted with ``finite=True``, in which
    case E is treated as the finite set it stores.
    """
    if E.dimension != 1:
        raise ValueError("pinned patterns are one-dimensional")
    _check_square_map(P, 1)
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    steps = k * np.arange(1, m + 1, dtype=np.int64)
    if E.period is not None:
        q = E.period if modulus is None else modulus
        if E.period % q:
            raise ValueError(f"modulus {q} does not divide the period {E.period}")
        if E.shape[0] < E.period:
            raise InsufficientMargin("the window does not hold a full period")
        res = np.zeros(q, dtype=bool)
        res[np.asarray(E.values(), dtype=np.int64) % q] = True
        base = np.flatnonzero(res)
        if len(base) ** 2 > 4 * get_limits().state_bound:
            raise BoundExceeded("too many pinned pairs for this modulus")
        ff = np.zeros((len(base), len(base)), dtype=np.int32)
        if m == 0:
            return PinnedCertificate(k, m, q, base, ff)
        Ef = np.fft.rfft(res.astype(float))
        for j, b in enumerate(base):
            shifted = (base - b) % q
            vals = np.zeros(q, dtype=bool)
            vals[P.evaluate_mod_many(shifted.reshape(-1, 1), q)[:, 0]] = True
            Db = np.fft.irfft(Ef * np.fft.rfft(vals.astype(float)), n=q) > 0.5
            nxt = _steps_to_miss(Db, k)[base]
            ff[:, j] = np.where(nxt <= m, nxt, 0)
        return PinnedCertificate(k, m, q, base, ff)
    if not finite:
        raise InsufficientMargin(
            "membership in (E - x) + P(E - y) is undecidable on a window of a non-periodic set; pass finite=True"
        )
    pts = np.asarray(E.values(), dtype=np.int64)
    if len(pts) ** 3 * max(m, 1) > get_limits().enum_bound * 10:
        raise BoundExceeded("finite pinned search too large")
    ff = np.zeros((len(pts), len(pts)), dtype=np.int32)
    if m == 0:
        return PinnedCertificate(k, m, None, pts, ff)
    for j, y in enumerate(pts):
        Pv = np.array([P.evaluate((int(t),))[0] for t in pts - y], dtype=np.int64)
        for i, x in enumerate(pts):
            # t k in (E - x) + P(E - y)  iff  t k + x - P(n') in E for some n'
            cand = (x + steps)[:, None] - Pv[None, :]
            hit = E.contains_many(cand.reshape(-1, 1)).reshape(cand.shape).any(axis=1)
            miss = ~hit
            ff[i, j] = int(miss.argmax()) + 1 if miss.any() else 0
    return PinnedCertificate(k, m, None, pts, ff)
