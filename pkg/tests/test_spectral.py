import cmath
import itertools
from fractions import Fraction
from math import gcd, lcm, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expansivity.intpoly import IntPolynomialMap
from expansivity.modular import TorusRational
from expansivity.spectral import (
    CyclicProductSystem,
    GroupSet,
    NoExpansiveDirection,
    NonErgodicSystem,
    component_measure_of,
    ergodic_components,
    find_expansive_direction,
    find_return_time,
    increment_run,
    intersection_measure,
    orbit_union_directional,
    orbit_union_polynomial,
    rat_mass,
    restricted_spectral_measure,
    spectral_measure,
)
from expansivity.valueset import build_counterexample

SQ = IntPolynomialMap.parse("n^2")


def oracle_spectrum(system, points):
    """sigma as {alpha tuple: mass} by explicit character sums."""
    X = list(itertools.product(*(range(q) for q in system.moduli)))
    A = set(points)
    out = {}
    for j in X:
        coef = sum(cmath.exp(-2j * cmath.pi * sum(ji * xi / q for ji, xi, q in zip(j, x, system.moduli))) for x in A)
        coef /= len(X)
        alpha = tuple(sum(Fraction(ji * g[i], q) for i, (ji, q) in enumerate(zip(j, system.moduli))) % 1 for g in system.gens)
        out[alpha] = out.get(alpha, 0.0) + abs(coef) ** 2
    return out


def oracle_orbit(system, x, steps):
    """Orbit closure of x under the given group elements (plain BFS)."""
    seen, todo = {x}, [x]
    while todo:
        y = todo.pop()
        for h in steps:
            z = tuple((a + b) % q for a, b, q in zip(y, h, system.moduli))
            if z not in seen:
                seen.add(z)
                todo.append(z)
    return seen


def test_spectrum_examples():
    s = CyclicProductSystem.diagonal([4])
    t = spectral_measure(s, GroupSet.from_points(s, [0, 2]))
    assert t.mass_at(TorusRational((Fraction(0),))) == pytest.approx(0.25)
    assert t.mass_at(TorusRational((Fraction(1, 2),))) == pytest.approx(0.25)
    assert t.mass_at(TorusRational((Fraction(1, 4),))) == pytest.approx(0, abs=1e-15)
    assert rat_mass(t, 1) == 0
    assert rat_mass(t, 2) == pytest.approx(0.25)
    full = spectral_measure(s, GroupSet.full(s))
    assert len(full.atoms()) == 1 and full.zero_mass == pytest.approx(1)
    q = 7
    s7 = CyclicProductSystem.diagonal([q])
    t7 = spectral_measure(s7, GroupSet.from_points(s7, [0]))
    assert np.allclose(t7.mass, 1 / q**2)
    assert t7.rat_mass(q) == pytest.approx(1 / q - 1 / q**2)


@pytest.mark.parametrize(
    "system,points",
    [
        (CyclicProductSystem.diagonal([3, 4]), [(0, 0), (1, 2), (2, 3)]),
        (CyclicProductSystem.standard(3, 2), [(0, 0), (1, 1), (0, 2)]),
        (CyclicProductSystem((6,), ((1,), (2,))), [0, 3, 4]),
        (CyclicProductSystem((5, 5), ((1, 2), (0, 1))), [(1, 1), (4, 0)]),
    ],
)
def test_spectrum_matches_character_sums(system, points):
    A = GroupSet.from_points(system, points)
    t = spectral_measure(system, A)
    pts = {tuple(p) if isinstance(p, tuple) else (p,) for p in points}
    ref = oracle_spectrum(system, pts)
    for alpha, mass in ref.items():
        assert t.mass_at(TorusRational(alpha)) == pytest.approx(mass, abs=1e-12)


def test_non_ergodic_rejected():
    s = CyclicProductSystem.diagonal([2, 4])
    assert not s.ergodic
    with pytest.raises(NonErgodicSystem):
        spectral_measure(s, GroupSet.full(s))
    assert CyclicProductSystem.diagonal([3, 35, 2431]).ergodic


def _random_system(rng):
    while True:
        I = int(rng.integers(1, 3))
        d = int(rng.integers(1, 3))
        moduli = tuple(int(x) for x in rng.integers(2, 30, size=I))
        if np.prod(moduli) > 2000:
            continue
        gens = tuple(tuple(int(rng.integers(0, q)) for q in moduli) for _ in range(d))
        s = CyclicProductSystem(moduli, gens)
        if s.ergodic:
            return s


def test_spectral_identities_random_corpus():
    rng = np.random.default_rng(7)
    for _ in range(40):
        s = _random_system(rng)
        A = GroupSet.random(s, rng, float(rng.uniform(0.1, 0.9)))
        t = spectral_measure(s, A)
        mu = float(A.measure)
        assert abs(t.zero_mass - mu**2) < 1e-12
        assert abs(t.total - mu) < 1e-9
        for v in itertools.product(range(s.period), repeat=s.d) if s.period**s.d <= 400 else []:
            assert abs(t.bochner(v) - float(intersection_measure(s, A, v))) < 1e-9


def test_components_examples():
    s6 = CyclicProductSystem.diagonal([6])
    comps = ergodic_components(s6, 2)
    assert [sorted(np.flatnonzero(c.mask)) for c in comps] == [[0, 2, 4], [1, 3, 5]]
    evens = GroupSet.from_points(s6, [0, 2, 4])
    assert component_measure_of(evens, comps[0]) == 1
    assert component_measure_of(GroupSet.from_points(s6, [0]), comps[1]) == 0
    assert len(ergodic_components(CyclicProductSystem.diagonal([5, 7]), 2)) == 1
    assert len(ergodic_components(CyclicProductSystem.standard(2, 2), 2)) == 4
    full = GroupSet.full(s6)
    assert all(component_measure_of(full, c) == 1 for c in comps)


def test_components_match_orbit_closure():
    rng = np.random.default_rng(3)
    for _ in range(15):
        s = _random_system(rng)
        for k in (2, 3, 4, 6):
            comps = ergodic_components(s, k)
            n = len(comps)
            assert n <= k**s.d
            steps = [s.element([k * int(i == t) for i in range(s.d)]) for t in range(s.d)]
            for c in comps:
                assert int(c.mask.sum()) * n == s.size
                pts = {tuple(int(x) for x in p) for p in np.argwhere(c.mask)}
                assert oracle_orbit(s, c.representative, steps) == pts
            A = GroupSet.random(s, rng)
            assert sum(c.measure_of(A) for c in comps) / n == A.measure


def test_parseval_and_component_increment():
    rng = np.random.default_rng(11)
    from math import factorial

    for _ in range(25):
        s = _random_system(rng)
        A = GroupSet.random(s, rng)
        t = spectral_measure(s, A)
        mu = float(A.measure)
        for M in (2, 3, 4):
            comps = ergodic_components(s, factorial(M))
            nus = [float(c.measure_of(A)) for c in comps]
            lhs = t.divisible_mass(factorial(M))
            assert abs(lhs - sum(x * x for x in nus) / len(nus)) < 1e-9
            assert max(nus) >= sqrt(mu**2 + t.rat_mass(M)) - 1e-9


def test_restricted_spectrum_on_component():
    s = CyclicProductSystem.diagonal([4, 9])
    rng = np.random.default_rng(5)
    A = GroupSet.random(s, rng)
    for comp in ergodic_components(s, 6):
        t = restricted_spectral_measure(s, A, comp.mask, 6)
        nu = comp.measure_of(A)
        assert t.total == pytest.approx(float(nu), abs=1e-9)
        assert t.zero_mass == pytest.approx(float(nu) ** 2, abs=1e-9)
        for v in range(1, 8):
            exact = intersection_measure(s, A, [6 * v], comp.mask)
            assert t.bochner([v]) == pytest.approx(float(exact), abs=1e-9)


def test_directional_examples():
    s = CyclicProductSystem.standard(3, 2)
    single = GroupSet.from_points(s, [(0, 0)])
    assert orbit_union_directional(s, single, (1, 0)) == Fraction(1, 3)
    assert orbit_union_directional(s, GroupSet.full(s), (1, 2)) == 1
    row = GroupSet.from_points(s, [(0, j) for j in range(3)])
    assert orbit_union_directional(s, row, (1, 0)) == 1
    with pytest.raises(ValueError):
        orbit_union_directional(s, single, (2, 0))


@pytest.mark.parametrize("N", range(2, 8))
def test_singleton_orbit_is_one_over_N(N):
    s = CyclicProductSystem.standard(N, 2)
    single = GroupSet.from_points(s, [(0, 0)])
    for v in itertools.product(range(-N, N + 1), repeat=2):
        if gcd(*v) == 1:
            assert orbit_union_directional(s, single, v) == Fraction(1, N)


def test_polynomial_union_examples():
    s3 = CyclicProductSystem.diagonal([3])
    assert orbit_union_polynomial(s3, GroupSet.from_points(s3, [1]), SQ) == Fraction(2, 3)
    s = CyclicProductSystem.diagonal([5, 7])
    assert orbit_union_polynomial(s, GroupSet.full(s), SQ) == 1
    assert orbit_union_polynomial(s, GroupSet.from_points(s, [(1, 2)]), IntPolynomialMap.parse("n")) == 1


def test_polynomial_union_matches_brute_force():
    rng = np.random.default_rng(2)
    P = IntPolynomialMap.parse("n^2 + n; n^3")
    for _ in range(10):
        s = _random_system(rng)
        if s.d != 2:
            continue
        A = GroupSet.random(s, rng, 0.05)
        pts = {tuple(int(x) for x in p) for p in np.argwhere(A.mask)}
        union = set()
        for n in range(s.period):
            h = s.element(P((n,)))
            union |= {tuple((a + b) % q for a, b, q in zip(x, h, s.moduli)) for x in pts}
        assert orbit_union_polynomial(s, A, P) == Fraction(len(union), s.size)


def test_return_time_examples():
    s = CyclicProductSystem.diagonal([6])
    assert find_return_time(s, GroupSet.full(s), [1], 3) == 3
    m = find_return_time(s, GroupSet.from_points(s, [0, 1, 2]), [1], 1)
    assert m == 1 and m <= 4


def test_find_direction_examples():
    s5 = CyclicProductSystem.standard(5, 2)
    rng = np.random.default_rng(0)
    mask = np.zeros(25, bool)
    mask[rng.choice(25, 10, replace=False)] = True
    A = GroupSet.from_mask(mask.reshape(5, 5))
    assert A.measure == Fraction(2, 5)
    res = find_expansive_direction(s5, A, 0.5)
    assert res.annihilator_mass <= 0.5
    assert float(res.union) >= res.lower_bound - 1e-9
    full = find_expansive_direction(s5, GroupSet.full(s5), 0.01)
    assert full.annihilator_mass == pytest.approx(0, abs=1e-12)
    s3 = CyclicProductSystem.standard(3, 2)
    with pytest.raises(NoExpansiveDirection) as info:
        find_expansive_direction(s3, GroupSet.from_points(s3, [(0, 0)]), 0.01, M_cap=100)
    assert info.value.best is not None


def test_increment_examples():
    s = CyclicProductSystem.diagonal([4])
    tr = increment_run(s, GroupSet.full(s), 0.3, P=SQ)
    assert tr.status == "success" and tr.steps == [] and tr.k == 1
    tr = increment_run(s, GroupSet.from_points(s, [0]), 0.3, P=SQ)
    assert tr.status == "success"
    assert tr.steps[0].union == Fraction(1, 2)
    assert tr.final_union > Fraction(7, 10) or tr.component_size == 1


def test_increment_depth_two_frozen_trace():
    bp = build_counterexample(SQ, 2)
    s = CyclicProductSystem.diagonal(bp.moduli)
    tr = increment_run(s, GroupSet.product(bp.moduli, bp.sets), 0.1, P=SQ)
    assert tr.status == "success"
    assert [(st.M, st.k_step, st.nu_before, st.nu_after, st.union) for st in tr.steps] == [
        (3, 3, Fraction(23, 105), Fraction(23, 35), Fraction(68, 105))
    ]
    assert tr.k == 3 and tr.final_union == Fraction(34, 35)


def test_increment_directional_runs():
    rng = np.random.default_rng(4)
    for q in (4, 6, 9):
        s = CyclicProductSystem.standard(q, 2)
        A = GroupSet.random(s, rng, 0.3)
        tr = increment_run(s, A, 0.2, mode="directional")
        assert tr.status in ("success", "saturated")
        for st_ in tr.steps:
            assert st_.nu_after - st_.nu_before >= st_.kappa / 3 - 1e-9


def test_sqrt_increment_inequality_grid():
    for i in range(101):
        mu = i / 100
        for j in range(101):
            kappa = (1 - mu * mu) * j / 100
            assert sqrt(mu * mu + kappa) >= mu + kappa / 3 - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.data())
def test_spectral_property(q1, q2, data):
    s = CyclicProductSystem((q1, q2), ((1, 0), (0, 1)))
    pts = data.draw(st.sets(st.tuples(st.integers(0, q1 - 1), st.integers(0, q2 - 1)), min_size=1))
    A = GroupSet.from_points(s, pts)
    t = spectral_measure(s, A, verify=True)
    mu = float(A.measure)
    assert abs(t.zero_mass - mu * mu) < 1e-12
    assert t.rat_mass(lcm(q1, q2)) == pytest.approx(mu - mu * mu, abs=1e-9)
