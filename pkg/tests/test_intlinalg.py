import itertools
import random
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expansivity._exact import det
from expansivity.intlinalg import (
    Haystack,
    annihilator_in_rat,
    complete_primitive_to_unimodular,
    complexity_gcd,
    haystack_window,
    joint_annihilator,
    multiplicative_complexity_bound,
    smallest_factor_counterexample,
    smith_normal_form,
)
from expansivity.intpoly import IntPolynomialMap
from expansivity.modular import TorusRational


def determinantal_invariant_factors(B):
    """Oracle: D_k = d_k / d_{k-1}, d_k the gcd of all k x k minors."""
    m, n = len(B), len(B[0])
    d_prev, out = 1, []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                g = gcd(g, det([[B[i][j] for j in cols] for i in rows]))
        if g == 0:
            break
        out.append(g // d_prev)
        d_prev = g
    return out


def test_snf_examples():
    s = smith_normal_form([[1, 0], [0, 1]])
    assert s.L == s.D == s.R == [[1, 0], [0, 1]]
    assert smith_normal_form([[2, 0], [0, 3]]).invariant_factors == [1, 6]
    assert smith_normal_form([[2, 4], [6, 8]]).invariant_factors == [2, 4]


def test_snf_zero_and_rectangular():
    assert smith_normal_form([[0, 0, 0]]).invariant_factors == []
    s = smith_normal_form([[4, 6, 10]])
    assert s.invariant_factors == [2]
    assert s.product() == [[4, 6, 10]]


def _check_snf(B):
    s = smith_normal_form(B)
    assert s.product() == B
    assert abs(det(s.L)) == 1 and abs(det(s.R)) == 1
    f = s.invariant_factors
    assert all(x > 0 for x in f)
    assert all(b % a == 0 for a, b in zip(f, f[1:]))
    for i, row in enumerate(s.D):
        for j, x in enumerate(row):
            assert i == j or x == 0
    return f


def test_snf_200_random_matrices_against_minor_oracle():
    rng = random.Random(1)
    for _ in range(200):
        m, n = rng.randint(1, 6), rng.randint(1, 6)
        B = [[rng.randint(-20, 20) for _ in range(n)] for _ in range(m)]
        f = _check_snf(B)
        if m <= 4 and n <= 4:
            assert f == determinantal_invariant_factors(B)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda m: st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=m, max_size=m)))
def test_snf_property(B):
    assert _check_snf(B) == determinantal_invariant_factors(B)


def test_complexity_examples():
    assert multiplicative_complexity_bound(IntPolynomialMap.parse("n; n^2")) == 1
    P = IntPolynomialMap.parse("2*n; n^2")
    assert smith_normal_form([[2, 0], [0, 1]]).invariant_factors == [1, 2]
    assert multiplicative_complexity_bound(P) == 2
    assert complexity_gcd(P, (1, 1), 4) == 1


def test_complexity_rejects_dependent_components():
    with pytest.raises(ValueError):
        multiplicative_complexity_bound(IntPolynomialMap.parse("n; 2*n"))


def test_smallest_factor_reading_has_counterexample():
    P = IntPolynomialMap.parse("2*n; n^2")
    a, q, g, d1 = smallest_factor_counterexample(P)
    assert d1 == 1 and g > d1
    assert gcd(gcd(*a), q) == 1
    assert complexity_gcd(P, a, q) == g
    # the hand-checked instance: a = (1, 0), q = 2 gives b = (2, 0)
    assert complexity_gcd(P, (1, 0), 2) == 2


def test_largest_factor_bound_is_exhaustively_valid():
    # Q = D_max holds for every coprime (a, q) in a box, for a small battery.
    for text in ["2*n; n^2", "6*n; 4*n^2 + 2*n", "n^2 + n; n^3", "3*n; 9*n^2; 27*n^3"]:
        P = IntPolynomialMap.parse(text)
        Q = multiplicative_complexity_bound(P, trials=0)
        d = P.dimension
        for q in range(1, 40):
            for a in itertools.product(range(0, 5), repeat=d):
                if gcd(gcd(*a), q) == 1:
                    assert complexity_gcd(P, a, q) <= Q


def test_unimodular_examples():
    assert complete_primitive_to_unimodular((1, 0, 0)) == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert complete_primitive_to_unimodular((2, 3)) == [[2, 3], [1, 2]]
    U = complete_primitive_to_unimodular((6, 10, 15))
    assert U[0] == [6, 10, 15] and det(U) == 1
    with pytest.raises(ValueError):
        complete_primitive_to_unimodular((2, 4))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=5).filter(lambda v: gcd(*v) == 1))
def test_unimodular_property(v):
    U = complete_primitive_to_unimodular(v)
    assert U[0] == list(v)
    assert det(U) == 1


def test_haystack_examples():
    assert haystack_window(2, 4) == [(1, 1)]
    assert haystack_window(2, 18) == [(1, 1), (1, 2), (1, 3)]
    assert haystack_window(3, 5) == []


def test_haystack_vandermonde():
    H = Haystack(3)
    vecs = [H.vector(t) for t in range(1, 9)]
    assert all(v[0] == 1 for v in vecs)
    for trio in itertools.combinations(vecs, 3):
        assert det(trio) != 0


def test_joint_annihilator_examples():
    assert joint_annihilator([(1, 1), (1, 2)], (6, 6)) == [TorusRational((Fraction(0), Fraction(0)))]
    pts = joint_annihilator([(1, 1)], (4, 4))
    assert {p.coords for p in pts} == {(Fraction(j, 4), Fraction(-j, 4) % 1) for j in range(4)}
    assert len(joint_annihilator([(1, 1)], (1, 1))) == 1


def test_annihilator_in_rat_bound():
    # three moment-curve vectors in H_M for M = 6 * 3^6: |det| = Vandermonde = 2
    M = 6 * 3**6
    vecs = [(1, 1, 1), (1, 2, 4), (1, 3, 9)]
    pts = annihilator_in_rat(vecs, (12, 12, 12), M)
    assert all(p.is_zero or 2 % p.denom == 0 for p in pts)
    assert len(pts) > 1  # some genuinely nonzero annihilating points exist
    with pytest.raises(ValueError):
        annihilator_in_rat([(1, 1, 1), (1, 2, 4), (1, 3, 9)], (6, 6, 6), 100)
