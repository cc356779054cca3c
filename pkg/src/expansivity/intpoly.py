"""Integer polynomial maps Z^r -> Z^d.

A map is stored as ``d`` sparse dictionaries from exponent tuples to
nonzero integer coefficients.  Text form::

    "3*x0^2*x1 - x1; x0"      # two components in x0, x1
    "n^2"                     # ``n`` is an alias for ``x0``
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _exact

Monomial = Tuple[int, ...]


def _graded_lex_key(m: Monomial):
    return (sum(m), m)


@dataclass(frozen=True, eq=False)
class IntPolynomialMap:
    arity: int
    components: Tuple[Dict[Monomial, int], ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be positive")
        if not self.components:
            raise ValueError("at least one component is required")
        clean = []
        for comp in self.components:
            c = {}
            for mono, coef in comp.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != self.arity or any(e < 0 for e in mono):
                    raise ValueError(f"bad monomial {mono} for arity {self.arity}")
                if int(coef) != coef:
                    raise ValueError(f"non-integer coefficient {coef!r}")
                if coef:
                    c[mono] = c.get(mono, 0) + int(coef)
                    if c[mono] == 0:
                        del c[mono]
            clean.append(c)
        object.__setattr__(self, "components", tuple(clean))

    # construction -------------------------------------------------------

    @classmethod
    def parse(cls, text: str, arity: Optional[int] = None) -> "IntPolynomialMap":
        return parse_polynomial(text, arity)

    @classmethod
    def univariate(cls, *coeff_lists: Sequence[int]) -> "IntPolynomialMap":
        """Arity-1 map from coefficient lists ``[c0, c1, c2, ...]``."""
        return cls(1, tuple({(i,): c for i, c in enumerate(cs) if c} for cs in coeff_lists))

    # basic attributes ---------------------------------------------------

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max((sum(m) for comp in self.components for m in comp), default=0)

    def component_degree(self, i: int) -> int:
        return max((sum(m) for m in self.components[i]), default=0)

    @property
    def constant_term(self) -> Tuple[int, ...]:
        zero = (0,) * self.arity
        return tuple(comp.get(zero, 0) for comp in self.components)

    @property
    def has_zero_constant_term(self) -> bool:
        return not any(self.constant_term)

    def monomials(self) -> List[Monomial]:
        """All monomials present in some component, graded-lex order."""
        seen = {m for comp in self.components for m in comp}
        return sorted(seen, key=_graded_lex_key)

    def __eq__(self, other):
        if not isinstance(other, IntPolynomialMap):
            return NotImplemented
        return self.arity == other.arity and self.components == other.components

    def __hash__(self):
        return hash((self.arity, tuple(frozenset(c.items()) for c in self.components)))

    def __repr__(self):
        return f"IntPolynomialMap({self.to_text()!r}, arity={self.arity})"

    # evaluation ---------------------------------------------------------

    def __call__(self, *x):
        if len(x) == 1 and not isinstance(x[0], (int, np.integer)):
            x = tuple(x[0])
        return self.evaluate(x)

    def evaluate(self, x: Sequence[int]) -> Tuple[int, ...]:
        x = tuple(int(v) for v in x)
        if len(x) != self.arity:
            raise ValueError(f"expected {self.arity} arguments, got {len(x)}")
        out = []
        for comp in self.components:
            total = 0
            for mono, coef in comp.items():
                term = coef
                for xi, e in zip(x, mono):
                    if e:
                        term *= xi**e
                total += term
            out.append(total)
        return tuple(out)

    def evaluate_mod_many(self, points: np.ndarray, modulus: int) -> np.ndarray:
        """Values mod ``modulus`` at many points; returns shape (N, d) int64.

        ``points`` has shape (N, arity).  Products are reduced after every
        multiplication, so ``modulus`` must stay below 3e9.
        """
        if modulus >= 3 * 10**9:
            raise ValueError("modulus too large for int64 evaluation")
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.arity) % modulus
        n = pts.shape[0]
        max_exp = max((max(m) for comp in self.components for m in comp), default=0)
        powers = np.ones((max_exp + 1, n, self.arity), dtype=np.int64)
        for e in range(1, max_exp + 1):
            powers[e] = (powers[e - 1] * pts) % modulus
        out = np.zeros((n, self.dimension), dtype=np.int64)
        for i, comp in enumerate(self.components):
            acc = np.zeros(n, dtype=np.int64)
            for mono, coef in comp.items():
                term = np.full(n, coef % modulus, dtype=np.int64)
                for j, e in enumerate(mono):
                    if e:
                        term = (term * powers[e, :, j]) % modulus
                acc = (acc + term) % modulus
            out[:, i] = acc
        return out

    # transformations ----------------------------------------------------

    def without_constant(self) -> "IntPolynomialMap":
        zero = (0,) * self.arity
        return IntPolynomialMap(
            self.arity, tuple({m: c for m, c in comp.items() if m != zero} for comp in self.components)
        )

    def component(self, i: int) -> "IntPolynomialMap":
        return IntPolynomialMap(self.arity, (dict(self.components[i]),))

    def rescale(self, k: int) -> "IntPolynomialMap":
        """The map n -> P(k n) / k; needs a zero constant term."""
        if k < 1:
            raise ValueError("k must be positive")
        if not self.has_zero_constant_term:
            raise ValueError("rescaling needs a zero constant term")
        return IntPolynomialMap(
            self.arity,
            tuple({m: c * k ** (sum(m) - 1) for m, c in comp.items()} for comp in self.components),
        )

    def curry_to_single_variable(self) -> "IntPolynomialMap":
        """Substitute x_j -> n^((D+1)^j), j = 1..r, with D the degree.

        Exponent vectors are read as base-(D+1) digits, so distinct
        monomials land on distinct powers of n and every coefficient is
        carried over unchanged.
        """
        base = self.degree + 1
        weights = [base ** (j + 1) for j in range(self.arity)]
        comps = []
        for comp in self.components:
            new = {}
            for mono, coef in comp.items():
                e = sum(w * i for w, i in zip(weights, mono))
                if (e,) in new:
                    raise AssertionError("monomial substitution collided")
                new[(e,)] = coef
            comps.append(new)
        return IntPolynomialMap(1, tuple(comps))

    # linear algebra on components ---------------------------------------

    def coefficient_matrix(self, monomials: Optional[Sequence[Monomial]] = None) -> List[List[int]]:
        """Rows indexed by monomials (graded-lex), columns by components."""
        if monomials is None:
            monomials = self.monomials()
        return [[comp.get(m, 0) for comp in self.components] for m in monomials]

    def component_rank(self) -> Tuple[int, Optional[List[int]]]:
        """Rank of the components and, if deficient, a kernel witness ``a``
        with sum a_i P_i = 0 (first nonzero entry positive, coprime)."""
        rows = self.coefficient_matrix()
        r = _exact.rank(rows) if rows else 0
        if r == self.dimension:
            return r, None
        return r, _exact.kernel_vector(rows, self.dimension)

    def linear_degenerate_combination(self) -> Optional[Tuple[List[int], List[int]]]:
        """Integers alpha != 0 and beta with sum alpha_i P_i = sum beta_j x_j, or None."""
        if not self.has_zero_constant_term:
            raise ValueError("linear_degenerate_combination needs a zero constant term")
        high = [m for m in self.monomials() if sum(m) >= 2]
        alpha = _exact.kernel_vector(self.coefficient_matrix(high), self.dimension)
        if alpha is None:
            return None
        beta = []
        for j in range(self.arity):
            unit = tuple(int(t == j) for t in range(self.arity))
            beta.append(sum(a * comp.get(unit, 0) for a, comp in zip(alpha, self.components)))
        return alpha, beta

    # text ---------------------------------------------------------------

    def to_text(self) -> str:
        return "; ".join(_component_text(comp, self.arity) for comp in self.components)


def _monomial_text(mono: Monomial, arity: int) -> str:
    parts = []
    for j, e in enumerate(mono):
        if e == 0:
            continue
        var = "n" if arity == 1 else f"x{j}"
        parts.append(var if e == 1 else f"{var}^{e}")
    return "*".join(parts)


def _component_text(comp: Dict[Monomial, int], arity: int) -> str:
    if not comp:
        return "0"
    out = []
    for mono in sorted(comp, key=_graded_lex_key, reverse=True):
        coef = comp[mono]
        body = _monomial_text(mono, arity)
        mag = abs(coef)
        if not body:
            term = str(mag)
        elif mag == 1:
            term = body
        else:
            term = f"{mag}*{body}"
        if not out:
            out.append(term if coef > 0 else f"-{term}")
        else:
            out.append(("+ " if coef > 0 else "- ") + term)
    return " ".join(out)


_TOKEN = re.compile(r"\s*(?:(\d+)|(x\d+|n)|(\*\*|[+\-*^])|(\S))")


def _tokens(text: str):
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        pos = m.end()
        num, var, op, bad = m.groups()
        if bad is not None:
            if bad in "./":
                raise ValueError(f"non-integer coefficient near {text[m.start():].strip()!r}")
            raise ValueError(f"unexpected character {bad!r} in polynomial {text!r}")
        if num is not None:
            yield ("num", int(num))
        elif var is not None:
            yield ("var", 0 if var == "n" else int(var[1:]))
        else:
            yield ("op", "^" if op == "**" else op)


def _parse_component(text: str) -> Dict[Tuple[int, ...], int]:
    toks = list(_tokens(text))
    if not toks:
        raise ValueError("empty polynomial component")
    terms: Dict[Tuple[Tuple[int, int], ...], int] = {}
    i = 0
    sign = 1
    if toks[0] == ("op", "-"):
        sign, i = -1, 1
    elif toks[0] == ("op", "+"):
        i = 1
    while True:
        coef = sign
        exps: Dict[int, int] = {}
        expect_factor = True
        while expect_factor:
            if i >= len(toks):
                raise ValueError(f"dangling operator in {text!r}")
            kind, val = toks[i]
            i += 1
            power = 1
            if i < len(toks) and toks[i] == ("op", "^"):
                if i + 1 >= len(toks) or toks[i + 1][0] != "num":
                    raise ValueError(f"exponent must be a nonnegative integer in {text!r}")
                power = toks[i + 1][1]
                i += 2
            if kind == "num":
                coef *= val**power
            elif kind == "var":
                exps[val] = exps.get(val, 0) + power
            else:
                raise ValueError(f"unexpected operator {val!r} in {text!r}")
            expect_factor = i < len(toks) and toks[i] == ("op", "*")
            if expect_factor:
                i += 1
        key = tuple(sorted(exps.items()))
        terms[key] = terms.get(key, 0) + coef
        if i >= len(toks):
            break
        kind, val = toks[i]
        if kind != "op" or val not in "+-":
            raise ValueError(f"expected + or - in {text!r}")
        sign = 1 if val == "+" else -1
        i += 1
    return terms


def parse_polynomial(text: str, arity: Optional[int] = None) -> IntPolynomialMap:
    """Parse ``;``-separated components in variables ``x0..`` (or ``n``)."""
    raw = [_parse_component(part) for part in text.split(";")]
    used = [v for comp in raw for key in comp for v, _ in key]
    inferred = max(used, default=0) + 1
    if arity is None:
        arity = inferred
    elif inferred > arity:
        raise ValueError(f"polynomial uses x{inferred - 1} but arity is {arity}")
    comps = []
    for comp in raw:
        c: Dict[Monomial, int] = {}
        for key, coef in comp.items():
            mono = [0] * arity
            for v, e in key:
                mono[v] = e
            c[tuple(mono)] = c.get(tuple(mono), 0) + coef
        comps.append(c)
    return IntPolynomialMap(arity, tuple(comps))
