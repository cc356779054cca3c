"""Finite rotation systems X = prod Z/q_i under a Z^d action, their spectral
measures, T^k-ergodic components, orbit unions and the measure-increment run.

Set measures and component measures are exact fractions.  Spectral masses
are floats (they come from an FFT) and are compared with a 1e-9 tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd, lcm, prod, sqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundExceeded, InvariantViolation, get_limits
from .intlinalg import haystack_window
from .intpoly import IntPolynomialMap
from .modular import TorusRational, divisors

TOL = 1e-9


class NonErgodicSystem(ValueError):
    """Spectral operations need the generators to generate the whole group."""


@dataclass(frozen=True)
class CyclicProductSystem:
    """X = prod Z/q_i with T^{e_t} x = x + g_t."""

    moduli: Tuple[int, ...]
    gens: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        moduli = tuple(int(q) for q in self.moduli)
        if not moduli or any(q < 1 for q in moduli):
            raise ValueError("moduli must be positive")
        gens = tuple(tuple(int(x) % q for x, q in zip(g, moduli)) for g in self.gens)
        if not gens or any(len(g) != len(moduli) for g in self.gens):
            raise ValueError("each generator needs one residue per level")
        size = prod(moduli)
        if size > get_limits().state_bound:
            raise BoundExceeded(f"|X| = {size} exceeds the state bound")
        object.__setattr__(self, "moduli", moduli)
        object.__setattr__(self, "gens", gens)

    @classmethod
    def diagonal(cls, moduli: Sequence[int]) -> "CyclicProductSystem":
        """Z-action by the all-ones vector (the counterexample rotation)."""
        return cls(tuple(moduli), (tuple(1 for _ in moduli),))

    @classmethod
    def standard(cls, q: int, d: int) -> "CyclicProductSystem":
        """(Z/q)^d with the standard Z^d-action."""
        return cls((q,) * d, tuple(tuple(int(i == t) for i in range(d)) for t in range(d)))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.moduli

    @property
    def size(self) -> int:
        return prod(self.moduli)

    @property
    def d(self) -> int:
        return len(self.gens)

    @property
    def period(self) -> int:
        return lcm(*self.moduli)

    def element(self, v: Sequence[int]) -> Tuple[int, ...]:
        """The translation sum_t v_t g_t as a group element."""
        if len(v) != self.d:
            raise ValueError(f"expected a vector of length {self.d}")
        return tuple(sum(int(vt) * g[i] for vt, g in zip(v, self.gens)) % q for i, q in enumerate(self.moduli))

    def subgroup(self, elements: Sequence[Sequence[int]]) -> np.ndarray:
        """Mask of the subgroup generated by the given group elements."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[(0,) * len(self.moduli)] = True
        for h in elements:
            h = tuple(int(x) % q for x, q in zip(h, self.moduli))
            order = lcm(1, *(q // gcd(x, q) for x, q in zip(h, self.moduli)))
            step = 1
            while step < order:
                shift = tuple((step * x) % q for x, q in zip(h, self.moduli))
                mask |= np.roll(mask, shift, axis=tuple(range(len(self.moduli))))
                step *= 2
        return mask

    def scaled_subgroup(self, k: int) -> np.ndarray:
        return self.subgroup([self.element([k * int(s == t) for s in range(self.d)]) for t in range(self.d)])

    @property
    def ergodic(self) -> bool:
        return bool(self.scaled_subgroup(1).all())

    def translate(self, mask: np.ndarray, h: Sequence[int]) -> np.ndarray:
        return np.roll(mask, tuple(int(x) for x in h), axis=tuple(range(len(self.moduli))))

    def to_json(self) -> dict:
        return {"moduli": list(self.moduli), "generators": [list(g) for g in self.gens]}


@dataclass(frozen=True, eq=False)
class GroupSet:
    """A subset of X, as a mask or as a product of per-level residue sets."""

    moduli: Tuple[int, ...]
    mask_data: Optional[np.ndarray] = None
    factors: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if (self.mask_data is None) == (self.factors is None):
            raise ValueError("give exactly one of mask or factors")
        if self.mask_data is not None:
            m = np.asarray(self.mask_data, dtype=bool)
            if m.shape != tuple(self.moduli):
                raise ValueError("mask shape differs from the moduli")
            object.__setattr__(self, "mask_data", m)
        else:
            if len(self.factors) != len(self.moduli):
                raise ValueError("one residue set per level")
            fac = tuple(tuple(sorted({int(r) % q for r in f})) for f, q in zip(self.factors, self.moduli))
            object.__setattr__(self, "factors", fac)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "GroupSet":
        return cls(tuple(mask.shape), mask_data=mask)

    @classmethod
    def from_points(cls, system: CyclicProductSystem, points) -> "GroupSet":
        mask = np.zeros(system.shape, dtype=bool)
        for p in points:
            p = (p,) if isinstance(p, (int, np.integer)) else tuple(p)
            mask[tuple(int(x) % q for x, q in zip(p, system.moduli))] = True
        return cls(system.moduli, mask_data=mask)

    @classmethod
    def product(cls, moduli: Sequence[int], factors) -> "GroupSet":
        return cls(tuple(moduli), factors=tuple(tuple(f) for f in factors))

    @classmethod
    def full(cls, system: CyclicProductSystem) -> "GroupSet":
        return cls(system.moduli, mask_data=np.ones(system.shape, dtype=bool))

    @classmethod
    def random(cls, system: CyclicProductSystem, rng: np.random.Generator, density: float = 0.5) -> "GroupSet":
        return cls(system.moduli, mask_data=rng.random(system.shape) < density)

    @property
    def mask(self) -> np.ndarray:
        if self.mask_data is not None:
            return self.mask_data
        out = np.ones((), dtype=bool)
        for f, q in zip(self.factors, self.moduli):
            level = np.zeros(q, dtype=bool)
            level[list(f)] = True
            out = np.logical_and.outer(out, level)
        return out

    @property
    def measure(self) -> Fraction:
        if self.factors is not None:
            return prod((Fraction(len(f), q) for f, q in zip(self.factors, self.moduli)), start=Fraction(1))
        return Fraction(int(self.mask_data.sum()), self.mask_data.size)


def _as_mask(system: CyclicProductSystem, A) -> np.ndarray:
    mask = A.mask if isinstance(A, GroupSet) else np.asarray(A, dtype=bool)
    if mask.shape != system.shape:
        raise ValueError("set lives on a different group")
    return mask


def intersection_measure(system: CyclicProductSystem, A, v: Sequence[int], component: Optional[np.ndarray] = None) -> Fraction:
    """Exact nu(A cap T^v A) on the component (default: all of X)."""
    mask = _as_mask(system, A)
    if component is not None:
        mask = mask & component
    moved = system.translate(mask, system.element(v))
    denom = system.size if component is None else int(component.sum())
    return Fraction(int((mask & moved).sum()), denom)


# spectral measures -----------------------------------------------------------


@dataclass(eq=False)
class SpectralMeasureTable:
    """Atoms alpha = nums / L on the d-torus with their masses."""

    L: int
    nums: np.ndarray  # (N, d) int64, residues mod L, distinct rows
    mass: np.ndarray  # (N,) float
    measure: Fraction  # exact nu(A) the table belongs to

    @property
    def d(self) -> int:
        return self.nums.shape[1]

    @property
    def denoms(self) -> np.ndarray:
        g = np.gcd.reduce(np.concatenate([self.nums, np.full((len(self.nums), 1), self.L)], axis=1), axis=1)
        return self.L // g

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    @property
    def zero_mass(self) -> float:
        zero = ~self.nums.any(axis=1)
        return float(self.mass[zero].sum())

    def mass_at(self, alpha: TorusRational) -> float:
        target = []
        for c in alpha.coords:
            if (c * self.L).denominator != 1:
                return 0.0
            target.append(int(c * self.L) % self.L)
        hit = np.all(self.nums == np.array(target, dtype=np.int64), axis=1)
        return float(self.mass[hit].sum())

    def rat_mass(self, M: int) -> float:
        """sigma(Rat(M)): mass of nonzero atoms with denom <= M."""
        den = self.denoms
        return float(self.mass[(den > 1) & (den <= M)].sum())

    def divisible_mass(self, k: int) -> float:
        """Mass of atoms with k alpha = 0, the zero atom included."""
        return float(self.mass[((self.nums * (k % self.L)) % self.L == 0).all(axis=1)].sum())

    def annihilator_mass(self, v: Sequence[int], exclude_zero: bool = True) -> float:
        """sigma(L_v^perp), optionally without the zero atom."""
        dots = (self.nums @ np.array(v, dtype=np.int64)) % self.L
        keep = dots == 0
        if exclude_zero:
            keep &= self.nums.any(axis=1)
        return float(self.mass[keep].sum())

    def bochner(self, v: Sequence[int]) -> complex:
        """sum_alpha sigma({alpha}) e(v . alpha)."""
        dots = (self.nums @ np.array(v, dtype=np.int64)) % self.L
        return complex((self.mass * np.exp(2j * np.pi * dots / self.L)).sum())

    def smallest_M(self, kappa: float) -> Optional[int]:
        """Least M with sigma(Rat(M)) >= kappa, scanning denominators present."""
        den = self.denoms
        nz = den > 1
        for M in sorted(set(int(x) for x in den[nz])):
            if float(self.mass[nz & (den <= M)].sum()) >= kappa:
                return M
        return None

    def atoms(self, threshold: float = 1e-12) -> List[Tuple[TorusRational, float]]:
        out = []
        for row, w in zip(self.nums, self.mass):
            if w > threshold:
                out.append((TorusRational(tuple(Fraction(int(x), self.L) for x in row)), float(w)))
        return out

    def to_json(self, threshold: float = 1e-12) -> dict:
        return {
            "L": self.L,
            "measure": str(self.measure),
            "total_mass": self.total,
            "zero_mass": self.zero_mass,
            "atoms": [{"alpha": a.to_json()["coords"], "mass": w} for a, w in self.atoms(threshold)],
        }


def _character_frequencies(system: CyclicProductSystem) -> np.ndarray:
    """Numerators over L of alpha(chi_j) for every character index j, shape (|X|, d)."""
    L = system.period
    idx = np.indices(system.shape).reshape(len(system.moduli), -1).T.astype(np.int64)
    scale = np.array([L // q for q in system.moduli], dtype=np.int64)
    G = np.array(system.gens, dtype=np.int64)  # (d, I)
    return ((idx * scale) @ G.T) % L


def restricted_spectral_measure(
    system: CyclicProductSystem,
    A,
    component: Optional[np.ndarray] = None,
    K: int = 1,
) -> SpectralMeasureTable:
    """Spectral measure of A for the sub-action of K Z^d on one of its components.

    With f = 1_{A cap C} and n = |X|/|C|, the atom at K alpha(chi) collects
    n |f^(chi)|^2 over every character chi; for K = 1 and C = X this is the
    ordinary spectral measure.
    """
    if not system.ergodic:
        raise NonErgodicSystem("the system is not ergodic")
    mask = _as_mask(system, A)
    C = np.ones(system.shape, dtype=bool) if component is None else component
    f = (mask & C).astype(float)
    n_comp = system.size / int(C.sum())
    coef = np.fft.fftn(f) / system.size
    mass = (np.abs(coef) ** 2).ravel() * n_comp
    L = system.period
    nums = (_character_frequencies(system) * (K % L)) % L
    uniq, inv = np.unique(nums, axis=0, return_inverse=True)
    inv = inv.ravel()
    if K == 1 and len(uniq) != system.size:
        raise InvariantViolation("distinct characters share an eigenvalue frequency")
    grouped = np.bincount(inv, weights=mass, minlength=len(uniq))
    measure = Fraction(int((mask & C).sum()), int(C.sum()))
    return SpectralMeasureTable(L, uniq, grouped, measure)


def spectral_measure(system: CyclicProductSystem, A, verify: bool = True, seed: int = 0) -> SpectralMeasureTable:
    table = restricted_spectral_measure(system, A)
    if verify:
        mu = table.measure
        if abs(table.total - float(mu)) > TOL:
            raise InvariantViolation("total spectral mass differs from mu(A)")
        if abs(table.zero_mass - float(mu) ** 2) > TOL:
            raise InvariantViolation("zero atom differs from mu(A)^2")
        rng = np.random.default_rng(seed)
        for _ in range(50):
            v = [int(x) for x in rng.integers(-10 * system.period, 10 * system.period, size=system.d)]
            exact = intersection_measure(system, A, v)
            if abs(table.bochner(v) - float(exact)) > TOL:
                raise InvariantViolation(f"Bochner reconstruction fails at v = {v}")
    return table


def rat_mass(table: SpectralMeasureTable, M: int) -> float:
    return table.rat_mass(M)


# ergodic components ----------------------------------------------------------


@dataclass(eq=False)
class ErgodicComponent:
    """A coset of the subgroup generated by k g_1, ..., k g_d."""

    representative: Tuple[int, ...]
    mask: np.ndarray
    k: int
    count: int  # number of components n

    @property
    def measure(self) -> Fraction:
        return Fraction(1, self.count)

    def measure_of(self, A) -> Fraction:
        m = A.mask if isinstance(A, GroupSet) else np.asarray(A, dtype=bool)
        return Fraction(int((m & self.mask).sum()), int(self.mask.sum()))


def _coset_masks(system: CyclicProductSystem, H: np.ndarray, within: Optional[np.ndarray] = None):
    """Cosets of the subgroup H (optionally only those inside ``within``)."""
    elems = np.argwhere(H).astype(np.int64)
    q = np.array(system.moduli, dtype=np.int64)
    n_cosets = system.size // len(elems)
    if n_cosets * len(elems) > 4 * get_limits().state_bound * 10:
        raise BoundExceeded("too many components to enumerate")
    labels = np.full(system.size, -1, dtype=np.int64)
    allowed = np.ones(system.size, dtype=bool) if within is None else within.ravel()
    out = []
    for flat in range(system.size):
        if labels[flat] != -1 or not allowed[flat]:
            continue
        rep = np.array(np.unravel_index(flat, system.shape), dtype=np.int64)
        pts = (rep + elems) % q
        idx = np.ravel_multi_index(tuple(pts.T), system.shape)
        labels[idx] = len(out)
        m = np.zeros(system.size, dtype=bool)
        m[idx] = True
        out.append((tuple(int(x) for x in rep), m.reshape(system.shape)))
    return out, n_cosets


def ergodic_components(system: CyclicProductSystem, k: int, within: Optional[np.ndarray] = None) -> List[ErgodicComponent]:
    """T^k-ergodic components, ordered by representative (smallest flat index).

    With ``within`` (itself a component for some divisor of k) only the
    components inside it are returned.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not system.ergodic:
        raise NonErgodicSystem("the system is not ergodic")
    H = system.scaled_subgroup(k)
    cosets, n = _coset_masks(system, H, within)
    if n > k**system.d:
        raise InvariantViolation(f"{n} components exceed k^d = {k ** system.d}")
    return [ErgodicComponent(rep, m, k, n) for rep, m in cosets]


def component_measure_of(A, component: ErgodicComponent) -> Fraction:
    return component.measure_of(A)


# orbit unions ----------------------------------------------------------------


def _sumset_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    prod = np.fft.rfftn(a.astype(float)) * np.fft.rfftn(b.astype(float))
    conv = np.fft.irfftn(prod, s=a.shape, axes=tuple(range(a.ndim)))
    return conv > 0.5


def _measure_on(mask: np.ndarray, component: Optional[np.ndarray]) -> Fraction:
    if component is None:
        return Fraction(int(mask.sum()), mask.size)
    return Fraction(int((mask & component).sum()), int(component.sum()))


def _is_primitive(v: Sequence[int]) -> bool:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g == 1


def orbit_union_directional_mask(system: CyclicProductSystem, A, v: Sequence[int], K: int = 1, component=None) -> np.ndarray:
    mask = _as_mask(system, A)
    if component is not None:
        mask = mask & component
    w = system.element([K * int(x) for x in v])
    return _sumset_mask(mask, system.subgroup([w])) if mask.any() else mask.copy()


def orbit_union_directional(system: CyclicProductSystem, A, v: Sequence[int], K: int = 1, component=None) -> Fraction:
    """Exact measure of the union of T^{n K v} A over n in Z."""
    if system.d < 2:
        raise ValueError("directional unions need d >= 2")
    if not _is_primitive(v):
        raise ValueError(f"{tuple(v)} is not primitive")
    return _measure_on(orbit_union_directional_mask(system, A, v, K, component), component)


def polynomial_shift_mask(system: CyclicProductSystem, P: IntPolynomialMap, K: int = 1) -> np.ndarray:
    """Mask of the group elements T^{P(K n)}, n in Z^r (one period suffices)."""
    if P.dimension != system.d:
        raise ValueError("P must take values in Z^d")
    L = system.period
    count = L**P.arity
    if count > get_limits().enum_bound:
        raise BoundExceeded(f"{count} polynomial arguments exceed the enumeration bound")
    n = np.indices((L,) * P.arity).reshape(P.arity, -1).T.astype(np.int64)
    vals = P.evaluate_mod_many((K % L) * n % L, L)  # (count, d), P(Kn) mod L
    vals = np.unique(vals, axis=0)
    G = np.array(system.gens, dtype=np.int64)  # (d, I)
    q = np.array(system.moduli, dtype=np.int64)
    pts = np.zeros((len(vals), len(system.moduli)), dtype=np.int64)
    for t in range(system.d):
        pts = (pts + (vals[:, t : t + 1] % q) * (G[t] % q)) % q
    mask = np.zeros(system.shape, dtype=bool)
    mask[tuple(pts.T)] = True
    return mask


def orbit_union_polynomial(system: CyclicProductSystem, A, P: IntPolynomialMap, K: int = 1, component=None) -> Fraction:
    """Exact measure of the union of T^{P(K n)} A over n in Z^r."""
    mask = _as_mask(system, A)
    if component is not None:
        mask = mask & component
    if not mask.any():
        return Fraction(0)
    union = _sumset_mask(mask, polynomial_shift_mask(system, P, K))
    return _measure_on(union, component)


# directional search ----------------------------------------------------------


class NoExpansiveDirection(BoundExceeded):
    def __init__(self, message: str, best: Optional[dict]):
        super().__init__(message)
        self.best = best


@dataclass
class DirectionResult:
    v: Tuple[int, ...]
    annihilator_mass: float  # sigma(L_v^perp minus {0})
    union: Fraction
    lower_bound: float  # mu(A)^2 / sigma(L_v^perp)

    def to_json(self) -> dict:
        return {
            "v": list(self.v),
            "annihilator_mass": self.annihilator_mass,
            "union_measure": str(self.union),
            "lower_bound": self.lower_bound,
        }


def directional_lower_bound(system: CyclicProductSystem, A, v: Sequence[int], table: Optional[SpectralMeasureTable] = None):
    """(union measure, mu(A)^2 / sigma(L_v^perp)) for direction v."""
    table = spectral_measure(system, A, verify=False) if table is None else table
    mu = float(table.measure)
    s = table.annihilator_mass(v, exclude_zero=False)
    union = orbit_union_directional(system, A, v)
    return union, (mu * mu / s if s > 0 else 0.0)


def find_expansive_direction(system: CyclicProductSystem, A, gamma: float, M_cap: int = 10**4) -> DirectionResult:
    """First haystack vector v (in order of t) with sigma(L_v^perp minus 0) <= gamma."""
    if system.d < 2:
        raise ValueError("directional search needs d >= 2")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    table = spectral_measure(system, A)
    mu = float(table.measure)
    if mu == 0:
        raise ValueError("A is empty")
    best = None
    for v in haystack_window(system.d, M_cap):
        s = table.annihilator_mass(v)
        if best is None or s < best["annihilator_mass"] - 1e-15:
            best = {"v": list(v), "annihilator_mass": s}
        if s <= gamma:
            union = orbit_union_directional(system, A, v)
            bound = mu * mu / (mu * mu + s)
            if float(union) < bound - TOL:
                raise InvariantViolation(f"union {union} below the spectral bound {bound} at v = {v}")
            return DirectionResult(tuple(v), s, union, bound)
    raise NoExpansiveDirection(f"no haystack vector in H_{M_cap} has annihilator mass <= {gamma}", best)


def find_return_time(system: CyclicProductSystem, A, v: Sequence[int], k: int, component: Optional[np.ndarray] = None) -> int:
    """Least m = j k, j <= 2/nu(A), with nu(A cap T^{m v} A) > nu(A)^2 / 2."""
    mask = _as_mask(system, A)
    nu = _measure_on(mask if component is None else mask & component, component)
    if nu == 0:
        raise ValueError("nu(A) must be positive")
    J = int(2 / nu)  # floor: keeps m = j k <= 2k / nu(A)
    for j in range(1, J + 1):
        m = j * k
        if intersection_measure(system, mask, [m * int(x) for x in v], component) > nu * nu / 2:
            return m
    raise InvariantViolation("no return time below 2k/nu(A)")


# increment run ---------------------------------------------------------------


@dataclass
class IncrementStep:
    M: int
    M_factorial: int
    k_step: int
    K: int
    kappa: float
    nu_before: Fraction
    nu_after: Fraction
    rat_mass: float
    union: Fraction
    polynomial: Optional[str]

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "M_factorial": self.M_factorial,
            "k_step": self.k_step,
            "K": self.K,
            "kappa": self.kappa,
            "nu_A": str(self.nu_before),
            "nu_A_after": str(self.nu_after),
            "increase": float(self.nu_after - self.nu_before),
            "rat_mass": self.rat_mass,
            "union_measure": str(self.union),
            "polynomial": self.polynomial,
        }


@dataclass
class IncrementTrace:
    mode: str
    eps: float
    steps: List[IncrementStep] = field(default_factory=list)
    status: str = "running"
    k: int = 1
    final_nu: Fraction = Fraction(0)
    final_union: Fraction = Fraction(0)
    component_representative: Tuple[int, ...] = ()
    component_size: int = 0
    direction: Optional[Tuple[int, ...]] = None

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "eps": self.eps,
            "status": self.status,
            "k": self.k,
            "final_nu_A": str(self.final_nu),
            "final_union_measure": str(self.final_union),
            "component_representative": list(self.component_representative),
            "component_size": self.component_size,
            "direction": None if self.direction is None else list(self.direction),
            "steps": [s.to_json() for s in self.steps],
        }


def _best_direction_union(system: CyclicProductSystem, mask: np.ndarray, K: int, component: np.ndarray):
    """Largest union over directions, one per residue class u mod L with gcd(u, L) = 1."""
    L = system.period
    if L**system.d > get_limits().enum_bound // 100:
        raise BoundExceeded("too many residue directions")
    seen: Dict[Tuple[int, ...], Fraction] = {}
    best = (Fraction(-1), None)
    for u in itertools.product(range(L), repeat=system.d):
        if gcd(L, *u) != 1:
            continue
        w = system.element([K * x for x in u])
        if w not in seen:
            seen[w] = _measure_on(_sumset_mask(mask & component, system.subgroup([w])), component)
        if seen[w] > best[0]:
            best = (seen[w], _primitive_lift(u, L))
    return best


def _primitive_lift(u: Sequence[int], L: int) -> Tuple[int, ...]:
    """A primitive integer vector congruent to u mod L (needs gcd(u, L) = 1)."""
    u = [int(x) for x in u]
    if _is_primitive(u):
        return tuple(u)
    # shift the last coordinate by multiples of L until the gcd drops to 1
    head = 0
    for x in u[:-1]:
        head = gcd(head, x)
    t = 0
    while gcd(head, u[-1] + t * L) != 1:
        t += 1
    return tuple(u[:-1] + [u[-1] + t * L])


def increment_run(
    system: CyclicProductSystem,
    A,
    eps: float,
    mode: str = "polynomial",
    P: Optional[IntPolynomialMap] = None,
    max_steps: int = 64,
) -> IncrementTrace:
    """Pass to ergodic components of finer sub-actions while the orbit union
    stays at most 1 - eps, gaining at least kappa/3 in nu(A) each time."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if mode not in ("polynomial", "directional"):
        raise ValueError("mode is 'polynomial' or 'directional'")
    if mode == "polynomial":
        if P is None:
            raise ValueError("polynomial mode needs P")
        if not P.has_zero_constant_term:
            raise ValueError("P must have zero constant term")
    elif system.d < 2:
        raise ValueError("directional mode needs d >= 2")
    if not system.ergodic:
        raise NonErgodicSystem("the system is not ergodic")
    mask = _as_mask(system, A)
    delta = Fraction(int(mask.sum()), mask.size)
    if delta == 0:
        raise ValueError("mu(A) must be positive")
    gamma = float(delta) ** 2 * eps / (2 * (1 - eps))

    trace = IncrementTrace(mode, eps)
    C = np.ones(system.shape, dtype=bool)
    K = 1
    nu = delta
    for _ in range(max_steps + 1):
        if mode == "polynomial":
            union = orbit_union_polynomial(system, mask, P, K, C)
            direction = None
        else:
            union, direction = _best_direction_union(system, mask, K, C)
        trace.k, trace.final_nu, trace.final_union = K, nu, union
        trace.component_representative = tuple(int(x) for x in np.argwhere(C)[0])
        trace.component_size = int(C.sum())
        trace.direction = direction
        if union > 1 - Fraction(eps).limit_denominator(10**12):
            trace.status = "success"
            return trace
        if len(trace.steps) == max_steps:
            trace.status = "iteration_cap"
            return trace
        table = restricted_spectral_measure(system, mask, C, K)
        kappa = float(nu) ** 2 * eps**2 / 4 if mode == "polynomial" else gamma / 2
        M = table.smallest_M(kappa)
        if M is None:
            if mode == "directional":
                trace.status = "saturated"
                return trace
            raise InvariantViolation("no M with sigma(Rat(M)) >= kappa although expansion fails")
        rm = table.rat_mass(M)
        target = sqrt(float(nu) ** 2 + rm) - TOL
        Mf = factorial(M)
        chosen = None
        for k in divisors(system.period):
            if k > Mf:
                break
            comps = ergodic_components(system, K * k, within=C)
            values = [c.measure_of(mask) for c in comps]
            top = max(values)
            if float(top) >= target:
                chosen = (k, comps[values.index(top)], top)
                break
        if chosen is None:
            raise InvariantViolation(f"no k <= {M}! realizes the increment")
        k, comp, new_nu = chosen
        if float(new_nu - nu) < kappa / 3 - TOL:
            raise InvariantViolation(f"increment {float(new_nu - nu)} below kappa/3 = {kappa / 3}")
        K *= k
        trace.steps.append(
            IncrementStep(M, Mf, k, K, kappa, nu, new_nu, rm, union, P.rescale(K).to_text() if P is not None else None)
        )
        C, nu = comp.mask, new_nu
    raise AssertionError("unreachable")
