import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import l1_sphere_bruteforce, l1_sphere_count, shell_min_bruteforce
from ueda.bundles import (
    EpsilonSequence,
    FlatBundleTuple,
    FlatLineBundle,
    bundle_combine,
    classify,
    epsilon_sequence,
    golden_tuple,
    invariant_distance,
    l1_sphere,
    monodromy_equivalent,
    shell_minima,
    siegel_check,
    subadditivity_pairs,
)

GOLDEN = (math.sqrt(5) - 1) / 2
LIOUVILLE4 = sum(Fraction(1, 10 ** math.factorial(k)) for k in range(1, 5))


def test_bundle_combine_examples():
    t = FlatBundleTuple.from_angles([[Fraction(3, 10), 0]])
    assert bundle_combine(t, (0,)).angles == (0, 0)
    assert bundle_combine(t, (2,)).angles == (Fraction(3, 5), 0)
    t2 = FlatBundleTuple.from_angles([[Fraction(1, 4), 0], [Fraction(1, 2), 0]])
    assert bundle_combine(t2, (1, -1)).angles == (Fraction(3, 4), 0)


def test_distance_examples():
    L = FlatLineBundle(1, (Fraction(9, 10), 0))
    assert invariant_distance(L, L) == 0
    assert invariant_distance(L, FlatLineBundle.trivial(1)) == Fraction(1, 10)
    with pytest.raises(ValueError):
        invariant_distance(L, FlatLineBundle.trivial(2))


frac = st.fractions(min_value=0, max_value=1, max_denominator=40)
bundle = st.tuples(frac, frac).map(lambda a: FlatLineBundle(1, a))


@settings(max_examples=80, deadline=None)
@given(bundle, bundle, bundle)
def test_distance_is_an_invariant_metric(A, B, C):
    d = invariant_distance
    assert d(A, B) == d(B, A)
    assert (d(A, B) == 0) == (A == B)
    assert d(A, C) <= d(A, B) + d(B, C)
    assert d(A.tensor(C), B.tensor(C)) == d(A, B)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(frac, frac), min_size=2, max_size=2),
       st.tuples(st.integers(-5, 5), st.integers(-5, 5)), st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
def test_combine_is_a_homomorphism(rows, a, b):
    t = FlatBundleTuple.from_angles(rows, 1)
    s = tuple(x + y for x, y in zip(a, b))
    assert bundle_combine(t, a).tensor(bundle_combine(t, b)) == bundle_combine(t, s)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_l1_sphere_matches_bruteforce(r):
    for n in range(1, 7):
        pts = l1_sphere(r, n)
        assert len(pts) == l1_sphere_count(r, n)
        assert sorted(map(tuple, pts)) == sorted(l1_sphere_bruteforce(r, n))


def test_l1_sphere_size_at_scan_bound():
    assert len(l1_sphere(2, 200)) == 4 * 200


def test_shell_minima_match_bruteforce():
    rng = np.random.default_rng(5)
    rows = rng.random((2, 2)).tolist()
    t = FlatBundleTuple.from_angles(rows, 1)
    for n, a, d in shell_minima(t, 12):
        assert math.isclose(d, shell_min_bruteforce(rows, n), abs_tol=1e-12)
        assert sum(map(abs, a)) == n


def test_shell_minima_thread_independent():
    t = golden_tuple(2)
    assert shell_minima(t, 60, threads=1) == shell_minima(t, 60, threads=4)


def test_torsion_is_E0():
    t = FlatBundleTuple.from_angles([[Fraction(1, 6), Fraction(1, 3)], [Fraction(1, 2), 0]])
    rep = classify(t, 20)
    assert rep.verdict == "E0" and rep.torsion_order == 6
    # float angles within 1e-12 of rationals are torsion as well
    rep = classify(FlatBundleTuple.from_angles([[1 / 3, 0.25]]), 20)
    assert rep.verdict == "E0" and rep.torsion_order == 12


def test_golden_classification():
    rep = classify(golden_tuple(1), 200)
    assert rep.verdict == "S_A"
    assert rep.holds(2.0)
    # the tightest witness is a convergent denominator: a = 1, distance 1 - GOLDEN
    assert rep.witness == (1,)
    assert math.isclose(rep.witness_distance, 1 - GOLDEN, rel_tol=1e-12)
    assert math.isclose(rep.fitted_A, math.log(1 / (1 - GOLDEN)) / math.log(2), rel_tol=1e-12)
    # best approximations: minima over shells are attained at Fibonacci numbers
    fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
    record, best = [], math.inf
    for n, a, d in rep.shells:
        if d < best - 1e-15:
            best = d
            record.append(n)
    assert record == fib


def test_liouville_violates_A2():
    t = FlatBundleTuple.from_angles([[LIOUVILLE4, 0]])
    rep = classify(t, 200, torsion_denominator_bound=100)
    assert rep.verdict == "S_A"
    assert not rep.holds(2.0)
    bad = [(n, a) for n, a, d in rep.shells if d < Fraction(1, (2 * n) ** 2)]
    assert bad and bad[0][1] == (1,)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(1.0, 5.0), st.floats(0.0, 3.0))
def test_classify_monotone_in_A(theta, A, extra):
    rep = classify(FlatBundleTuple.from_angles([[theta, 0.0]]), 50, torsion_denominator_bound=10)
    if rep.verdict == "S_A" and rep.holds(A):
        assert rep.holds(A + extra)


def test_epsilon_examples():
    t = FlatBundleTuple.from_angles([[Fraction(1, 2), 0]])
    eps = epsilon_sequence(t, 1.0, 4)
    assert eps.inverse(2) == 0 and eps.eps(2) == math.inf
    g = golden_tuple(1)
    e1, e2 = epsilon_sequence(g, 1.0, 20), epsilon_sequence(g, 2.0, 20)
    for n in range(1, 21):
        assert math.isclose(e2.inverse(n), e1.inverse(n) / 2)
        assert math.isclose(e1.inverse(n), shell_min_bruteforce([[GOLDEN, 0.0]], n), abs_tol=1e-14)


def test_siegel_crafted_sequence():
    eps = EpsilonSequence(1.0, tuple(1 / n for n in range(1, 11)))
    pairs = {(n, m): (lhs, rhs, ok) for n, m, lhs, rhs, ok in subadditivity_pairs(eps, 10)}
    lhs, rhs, ok = pairs[(3, 1)]
    assert math.isclose(lhs, 1 / 2) and math.isclose(rhs, 4 / 3) and ok
    # n=3, m=2: 1/(3-2) = 1 > 1/3 + 1/2
    lhs, rhs, ok = pairs[(3, 2)]
    assert lhs == 1.0 and math.isclose(rhs, 5 / 6) and not ok
    rep = siegel_check(eps, 10)
    assert not rep.property_b and (3, 2) in [(n, m) for n, m, _, _ in rep.violations]
    # eps_n = n < (2n)^A for n <= 10 needs A > log 10 / log 20 = 0.768...
    assert rep.property_a == 0.8


def test_siegel_torsion_fails_a():
    t = FlatBundleTuple.from_angles([[Fraction(1, 3), 0]])
    rep = siegel_check(epsilon_sequence(t, 1.0, 10), 10)
    assert rep.property_a is None


def test_siegel_golden_r1():
    rep = siegel_check(epsilon_sequence(golden_tuple(1), 1.0, 30), 30)
    assert rep.property_a is not None and rep.property_b


@settings(max_examples=30, deadline=None)
@given(st.floats(0.001, 0.999), st.floats(0.0, 0.999))
def test_subadditivity_one_bundle(theta, phi):
    # for a single bundle the +-a symmetry aligns the two minimizers
    eps = epsilon_sequence(FlatBundleTuple.from_angles([[theta, phi]]), 1.0, 30)
    assert siegel_check(eps, 30).property_b


def test_subadditivity_counterexample_two_bundles():
    # with the l1 norm the difference of two minimizers can have norm n + m, so (b) can fail for r = 2
    eps = epsilon_sequence(golden_tuple(2), 1.0, 30)
    rep = siegel_check(eps, 30)
    assert not rep.property_b
    n, m, lhs, rhs = rep.violations[0]
    assert lhs > rhs


def test_monodromy_equivalence():
    a = np.diag(np.exp(2j * np.pi * np.array([0.1, 0.3])))
    b = np.diag(np.exp(2j * np.pi * np.array([0.2, 0.7])))
    P = np.array([[0, 1], [1, 0]])
    assert monodromy_equivalent([a, b], [a, b])
    assert monodromy_equivalent([a, b], [P @ a @ P, P @ b @ P])
    c = np.diag(np.exp(2j * np.pi * np.array([0.1, 0.31])))
    assert not monodromy_equivalent([a, b], [c, b])
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    assert monodromy_equivalent([a, b], [Q @ a @ Q.conj().T, Q @ b @ Q.conj().T])
    with pytest.raises(ValueError):
        monodromy_equivalent([a, np.array([[0, 1], [1, 0]])], [a, b])


def test_tuple_json_roundtrip():
    t = FlatBundleTuple.from_angles([[Fraction(1, 3), Fraction(2, 5)]])
    assert FlatBundleTuple.from_json(t.to_json(), exact=True) == t
