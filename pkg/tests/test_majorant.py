import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ueda.bundles import EpsilonSequence, golden_tuple, epsilon_sequence
from ueda.majorant import (
    MajorantParams,
    TorsionDivisorError,
    diagonal_bounds,
    hat_series,
    implicit_cross_check,
    implicit_polynomial,
    majorant_series,
    weighted_majorant_series,
)
from ueda.series import enumerate_multiindices

# A_n for r = 1, K = M = R = 1, from the Newton solution of the implicit equation
FROZEN_R1 = [2.0, 14.0, 118.0, 1106.0, 11082.0, 116214.0, 1259598.0]


def test_degree_two_identity():
    for K, M, R in itertools.product([0.5, 1, 2], repeat=3):
        for r in (1, 2, 3):
            s = majorant_series(MajorantParams(K, M, R, r), 2)
            for alpha in enumerate_multiindices(r, 2):
                assert s.coeff(alpha) == 2 * K * M * R ** 2


def test_degree_three_by_hand():
    # r = 1, K = M = R = 1, G = 1/(1-X-A): A = 2A(G-1) + 2((X+A)^2 + (X+A)^3 + ...).
    # Degree 2: 2.  Degree 3: 2*A_2 (from 2A(G-1)) + 2*2*A_2 (cross term of the square) + 2 (cube) = 14.
    s = majorant_series(MajorantParams(1, 1, 1, 1), 3)
    assert s.coeff((2,)) == 2.0
    assert s.coeff((3,)) == 14.0


def test_frozen_r1_sequence():
    s = majorant_series(MajorantParams(1, 1, 1, 1), 8)
    got = [s.coeff((n,)) for n in range(2, 9)]
    assert np.allclose(got, FROZEN_R1, rtol=1e-13)


def test_newton_oracle_agrees():
    for K, M, R, r in [(1, 1, 1, 1), (0.5, 2, 1, 2), (2, 0.5, 2, 3)]:
        p = MajorantParams(K, M, R, r)
        cc = implicit_cross_check(p, 10)
        assert cc.max_rel_deviation < 1e-10


def test_implicit_polynomial_vanishes_on_series():
    p = MajorantParams(0.5, 1, 2, 2)
    P = implicit_polynomial(p)
    assert P.r == 3
    cc = implicit_cross_check(p, 8)
    assert cc.iterations >= 1


def test_not_a_function_of_degree_only():
    # for r = 2 the coefficients within a shell differ: (3,0) and (2,1)
    s = majorant_series(MajorantParams(0.5, 2, 1, 2), 3)
    assert s.coeff((3, 0)) != s.coeff((2, 1))


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([0.5, 1.0, 2.0]))
def test_positive_and_permutation_symmetric(K, M, R):
    s = majorant_series(MajorantParams(K, M, R, 3), 6)
    B = s.B()
    for alpha, v in s.items():
        assert v > 0
        assert v <= B[sum(alpha)]
        for perm in itertools.permutations(alpha):
            assert math.isclose(s.coeff(perm), v, rel_tol=1e-12)


def test_hat_dominates_plain():
    for r in (1, 2, 3):
        s = majorant_series(MajorantParams(1, 1, 1, r), 12)
        B = diagonal_bounds(s, "plain").values
        Bh = diagonal_bounds(s, "hat").values
        assert np.all(Bh[2:] >= B[2:] * (1 - 1e-12))


def test_hat_r1_by_hand():
    # B^ = Y + 2 B^(-1 + 1/(1-B^)) + 2(-1 - B^ + 1/(1-B^)) with K = M = R = 1: B^_2 = 2*1 + 2*1 = 4
    logs, vals = hat_series(MajorantParams(1, 1, 1, 1), 3)
    assert math.isclose(vals[2], 4.0)


def test_radius_estimate_is_finite_and_positive():
    s = majorant_series(MajorantParams(1, 1, 1, 2), 12)
    rad = diagonal_bounds(s, "plain").radius_estimate
    assert 0 < rad < 1


def test_weighted_with_constant_eps_is_plain():
    K = 0.5
    eps = EpsilonSequence(K, tuple([1 / K] * 11))
    p = MajorantParams(K, 1.0, 1.0, 2, eps)
    w = weighted_majorant_series(p, 12)
    s = majorant_series(p, 12)
    assert np.array_equal(w.A.coeffs, s.A.coeffs)


def test_weighted_torsion_divisor():
    eps = EpsilonSequence(1.0, (1.0, 0.0, 1.0))
    with pytest.raises(TorsionDivisorError) as err:
        weighted_majorant_series(MajorantParams(1.0, 1.0, 1.0, 1, eps), 4)
    assert err.value.index == 2


def test_weighted_needs_long_sequence():
    eps = EpsilonSequence(1.0, (1.0,))
    with pytest.raises(ValueError):
        weighted_majorant_series(MajorantParams(1.0, 1.0, 1.0, 1, eps), 5)


def test_weighted_golden_sequence():
    eps = epsilon_sequence(golden_tuple(1), 1.0, 11)
    w = weighted_majorant_series(MajorantParams(1.0, 1.0, 1.0, 1, eps), 12)
    assert all(v > 0 for _, v in w.items())


def test_overflow_rescaling_keeps_logs():
    eps = EpsilonSequence(1.0, tuple([1e-40] * 11))
    w = weighted_majorant_series(MajorantParams(1.0, 1.0, 1.0, 1, eps), 12)
    assert w.sigma > 1 and w.log_coeffs is not None
    # A_2 = 2 M R^2 / eps^-1_1 = 2e40, exact in log form
    assert math.isclose(w.log_coeff((2,)), math.log(2e40), rel_tol=1e-12)
    plain = diagonal_bounds(w, "plain")
    assert np.all(np.isfinite(plain.log_values[2:]))


def test_params_validation():
    with pytest.raises(ValueError):
        MajorantParams(0, 1, 1, 1)
    with pytest.raises(ValueError):
        MajorantParams(1, 1, 1, 0)
    with pytest.raises(ValueError):
        MajorantParams(1, 1, 1, 1, EpsilonSequence(2.0, (1.0,)))
