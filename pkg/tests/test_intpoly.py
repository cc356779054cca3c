import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expansivity.intpoly import IntPolynomialMap, parse_polynomial


def test_evaluate_examples():
    assert IntPolynomialMap.parse("n^2")((3,)) == (9,)
    P = IntPolynomialMap.parse("x0 + x1^2; x0^2")
    assert P((1, 2)) == (5, 1)
    zero = IntPolynomialMap(2, ({},))
    assert zero((7, -3)) == (0,)
    assert zero.degree == 0


def test_parse_aliases_and_errors():
    assert parse_polynomial("n**2 - 3*n") == parse_polynomial("x0^2 - 3*x0")
    assert parse_polynomial("2*n; n^2").dimension == 2
    with pytest.raises(ValueError, match="non-integer"):
        parse_polynomial("n/2")
    with pytest.raises(ValueError, match="non-integer"):
        parse_polynomial("0.5*n")
    with pytest.raises(ValueError):
        parse_polynomial("n^")
    with pytest.raises(ValueError):
        parse_polynomial("x1", arity=1)


def test_zero_coefficients_are_not_stored():
    P = IntPolynomialMap(1, ({(1,): 2, (2,): 0},))
    assert P.components[0] == {(1,): 2}
    assert IntPolynomialMap.parse("n - n + n^2").components[0] == {(2,): 1}


def test_constant_term():
    P = IntPolynomialMap.parse("n^2 + 3; 2*n")
    assert P.constant_term == (3, 0)
    assert not P.has_zero_constant_term
    assert P.without_constant().has_zero_constant_term


def test_curry_examples():
    P = IntPolynomialMap.parse("x0*x1")
    assert P.curry_to_single_variable().components == ({(12,): 1},)
    Q = IntPolynomialMap.parse("x0^2; x1").curry_to_single_variable()
    assert Q.components == ({(6,): 1}, {(9,): 1})
    R = IntPolynomialMap.parse("3*n^2 - n").curry_to_single_variable()
    assert R.components == ({(6,): 3, (3,): -1},)


def test_component_rank_examples():
    assert IntPolynomialMap.parse("n; n^2").component_rank() == (2, None)
    r, w = IntPolynomialMap.parse("n; 2*n").component_rank()
    assert r == 1 and w == [2, -1]
    r, w = IntPolynomialMap.parse("x0 + x1; x0 - x1; x0").component_rank()
    assert r == 2 and w == [1, 1, -2]


def test_linear_degenerate_examples():
    assert IntPolynomialMap.parse("x0^2; x1^2").linear_degenerate_combination() is None
    assert IntPolynomialMap.parse("x0; x1^2").linear_degenerate_combination() == ([1, 0], [1, 0])
    P = parse_polynomial("x0 + x0^2; x0 - x0^2", arity=2)
    assert P.linear_degenerate_combination() == ([1, 1], [2, 0])
    with pytest.raises(ValueError):
        IntPolynomialMap.parse("n + 1").linear_degenerate_combination()


def test_rescale():
    P = IntPolynomialMap.parse("n^2 + 2*n")
    Q = P.rescale(3)
    for n in range(-5, 6):
        assert Q((n,))[0] * 3 == P((3 * n,))[0]


def test_evaluate_mod_many_matches_exact():
    import numpy as np

    P = IntPolynomialMap.parse("7*x0^3*x1 - 11*x1^2 + 5; x0")
    pts = np.array(list(itertools.product(range(-4, 5), repeat=2)))
    got = P.evaluate_mod_many(pts, 97)
    for p, row in zip(pts, got):
        assert tuple(row) == tuple(v % 97 for v in P(tuple(p)))


monomial = st.tuples(st.integers(0, 3), st.integers(0, 3))
component = st.dictionaries(monomial, st.integers(-20, 20), max_size=5)
maps = st.lists(component, min_size=1, max_size=3).map(lambda cs: IntPolynomialMap(2, tuple(cs)))


@settings(max_examples=80, deadline=None)
@given(maps, st.integers(-4, 4))
def test_curry_substitution_identity(P, n):
    D = P.degree
    Q = P.curry_to_single_variable()
    assert Q((n,)) == P((n ** (D + 1), n ** ((D + 1) ** 2)))


@settings(max_examples=80, deadline=None)
@given(maps)
def test_curry_preserves_rank(P):
    r, _ = P.component_rank()
    if r == P.dimension:
        assert P.curry_to_single_variable().component_rank()[0] == r


@settings(max_examples=80, deadline=None)
@given(maps)
def test_text_roundtrip(P):
    assert parse_polynomial(P.to_text(), arity=2) == P


@settings(max_examples=40, deadline=None)
@given(st.lists(st.dictionaries(monomial.filter(lambda m: sum(m) > 0), st.integers(-3, 3), max_size=4), min_size=2, max_size=3))
def test_degenerate_combination_matches_brute_force(comps):
    P = IntPolynomialMap(2, tuple(comps))
    found = P.linear_degenerate_combination()
    brute = False
    for alpha in itertools.product(range(-3, 4), repeat=P.dimension):
        if not any(alpha):
            continue
        combo = {}
        for a, comp in zip(alpha, P.components):
            for m, c in comp.items():
                combo[m] = combo.get(m, 0) + a * c
        if all(c == 0 or sum(m) <= 1 for m, c in combo.items()):
            brute = True
            break
    if found is None:
        assert not brute
    else:
        alpha, beta = found
        for x in itertools.product(range(-2, 3), repeat=2):
            vals = P(x)
            assert sum(a * v for a, v in zip(alpha, vals)) == sum(b * xi for b, xi in zip(beta, x))
