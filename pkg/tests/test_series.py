import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import catalan, poly_compose, poly_mul
from ueda.series import (
    TruncatedSeries,
    check_unitary,
    compose,
    enumerate_multiindices,
    get_basis,
    symmetric_transition,
)


def as_dict(s: TruncatedSeries, k: int = 0) -> dict:
    return {a: v[k] for a, v in s.terms() if v[k] != 0}


def random_series(rng, r, N, low=1, exact=False, m=1):
    b = get_basis(r, N)
    terms = []
    for e in b.exps:
        if sum(e) >= low:
            if exact:
                terms.append((tuple(e), [Fraction(int(x), 3) for x in rng.integers(-3, 4, size=m)]))
            else:
                terms.append((tuple(e), list(rng.normal(size=m) + 1j * rng.normal(size=m))))
    return TruncatedSeries.from_terms(b, terms, m, exact=exact)


def test_multiindex_counts():
    for r in range(1, 5):
        for n in range(0, 7):
            idx = enumerate_multiindices(r, n)
            assert len(idx) == math.comb(n + r - 1, r - 1)
            assert len(set(idx)) == len(idx)
            assert all(sum(a) == n for a in idx)


def test_graded_lex_order():
    assert enumerate_multiindices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    b = get_basis(2, 3)
    assert list(b.wdeg) == sorted(b.wdeg)


def test_basis_is_cached_by_value():
    assert get_basis(2, 4) is get_basis(2, 4, 0, 0)


@pytest.mark.parametrize("r,N", [(1, 6), (2, 5), (3, 4)])
def test_product_matches_dict_convolution(r, N):
    rng = np.random.default_rng(r * 10 + N)
    a = random_series(rng, r, N, low=0, exact=True)
    b = random_series(rng, r, N, low=0, exact=True)
    assert as_dict(a * b) == poly_mul(as_dict(a), as_dict(b), N)


@pytest.mark.parametrize("r,N", [(1, 6), (2, 4)])
def test_compose_matches_dict_oracle(r, N):
    rng = np.random.default_rng(7 + r)
    outer = random_series(rng, r, N, low=1, exact=True)
    inner = [random_series(rng, r, N, low=1, exact=True) for _ in range(r)]
    got = outer.compose(inner)
    want = poly_compose(as_dict(outer), [as_dict(x) for x in inner], N)
    assert as_dict(got) == want


def test_reverse_catalan_exact():
    # w = u - u^2 inverts to u = sum Catalan(n-1) w^n
    b = get_basis(1, 6)
    u = TruncatedSeries.from_terms(b, [((1,), [1]), ((2,), [-1])], 1, exact=True)
    inv = u.reverse()
    coeffs = [inv.coeff((n,))[0] for n in range(1, 7)]
    assert coeffs == [catalan(n - 1) for n in range(1, 7)]
    assert all(isinstance(c, (int, Fraction)) for c in coeffs)


def test_known_composition():
    b = get_basis(1, 4)
    f = TruncatedSeries.from_terms(b, [((1,), [1]), ((2,), [1])], 1, exact=True)
    g = f.compose([f])
    assert [g.coeff((n,))[0] for n in range(5)] == [0, 1, 2, 2, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_reverse_is_two_sided_inverse(seed, r):
    rng = np.random.default_rng(seed)
    N = 5 if r < 3 else 4
    h = random_series(rng, r, N, low=2, m=r)
    f = TruncatedSeries.identity(r, N) + h
    g = f.reverse()
    ident = TruncatedSeries.identity(r, N)
    assert (f.compose(g.components()) - ident).max_abs() < 1e-9 * max(1, g.max_abs())
    assert (g.compose(f.components()) - ident).max_abs() < 1e-9 * max(1, g.max_abs())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_composition_is_associative(seed):
    rng = np.random.default_rng(seed)
    r, N = 2, 4
    f, g, h = (TruncatedSeries.identity(r, N) + random_series(rng, r, N, low=2, m=r) for _ in range(3))
    left = f.compose(g.components()).compose(h.components())
    right = f.compose(g.compose(h.components()).components())
    assert (left - right).max_abs() < 1e-9 * max(1, left.max_abs())


def test_reciprocal_and_exp():
    b = get_basis(1, 8)
    x = TruncatedSeries.variable(b, 0, exact=True)
    g = (1 - x).reciprocal()
    assert all(g.coeff((n,))[0] == 1 for n in range(9))
    e = x.exp()
    assert all(e.coeff((n,))[0] == Fraction(1, math.factorial(n)) for n in range(9))


def test_compose_rejects_constant_inner_terms():
    b = get_basis(1, 3)
    f = TruncatedSeries.variable(b, 0)
    with pytest.raises(ValueError):
        compose(f, [f + 1.0])


def test_json_roundtrip():
    rng = np.random.default_rng(3)
    s = random_series(rng, 2, 4, low=0, m=2)
    back = TruncatedSeries.from_json(s.to_json())
    assert np.allclose(back.coeffs, s.coeffs)


def test_parameter_variables_do_not_raise_w_degree():
    b = get_basis(1, 3, 2, 2)
    q = TruncatedSeries.variable(b, 1)
    w = TruncatedSeries.variable(b, 0)
    prod = q * q * w
    assert prod.order() == 1
    # q-degree above M is truncated
    assert (q * q * q).is_zero()


def unitary(rng, r):
    Z = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def test_tau_degree_one_is_T():
    rng = np.random.default_rng(0)
    T = unitary(rng, 3)
    assert np.allclose(symmetric_transition(T, 1).tau, T)


def test_tau_of_diagonal():
    t = np.exp(2j * np.pi * np.array([0.1, 0.35]))
    tr = symmetric_transition(np.diag(t), 3)
    for i, alpha in enumerate(tr.indices):
        assert np.isclose(tr.tau[i, i], t[0] ** alpha[0] * t[1] ** alpha[1])
    assert np.allclose(tr.tau - np.diag(np.diag(tr.tau)), 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 5))
def test_tau_cocycle_and_unitarity(seed, r, n):
    rng = np.random.default_rng(seed)
    T, S = unitary(rng, r), unitary(rng, r)
    tT, tS, tTS = (symmetric_transition(M, n) for M in (T, S, T @ S))
    assert np.abs(tT.tau @ tS.tau - tTS.tau).max() < 1e-10
    U = tT.scaled()
    assert np.abs(U.conj().T @ U - np.eye(len(U))).max() < 1e-10


def test_check_unitary_rejects():
    with pytest.raises(ValueError):
        check_unitary(np.array([[2.0]]))
    with pytest.raises(ValueError):
        symmetric_transition(np.array([[1.0, 1.0], [0.0, 1.0]]), 2)
