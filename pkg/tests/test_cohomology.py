import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ueda.cohomology import (
    ConditioningError,
    Nerve,
    ObstructionNonzero,
    TwistedCochainProblem,
    coboundary_matrix,
    cocycle_check,
    estimate_K,
    group_cocycle_check,
    mode_coboundary_solve,
    nerve_coboundary_solve,
    singular_vector_family,
    solve_min_norm,
)
from ueda.cyclotomic import root_of_unity

T03 = cmath.exp(2j * cmath.pi * 0.3)
CYCLE = Nerve([1, 2, 3], [(1, 2), (2, 3), (3, 1)])


def cycle_problem(weight, rhs, nerve=CYCLE):
    W = np.array([[weight]])
    return TwistedCochainProblem("nerve", 1, [W, W, W], [np.array([x]) for x in rhs], nerve=nerve)


def test_zero_rhs_gives_zero():
    sol = nerve_coboundary_solve(cycle_problem(1.0, [0, 0, 0]))
    assert sol.solved and np.allclose(sol.values, 0)


def test_trivial_weights_solvable_iff_sum_zero():
    sol = nerve_coboundary_solve(cycle_problem(1.0, [1.0, 2.0, -3.0]))
    assert sol.solved
    sol = nerve_coboundary_solve(cycle_problem(1.0, [1.0, 0.0, 0.0]))
    assert not sol.solved
    # the residual is the projection onto the cokernel spanned by (1, 1, 1)
    assert np.allclose(sol.residual.reshape(-1), [1 / 3] * 3)
    assert np.isclose(sol.residual_norm, 1 / np.sqrt(3))


def test_trivial_weights_exact():
    sol = nerve_coboundary_solve(cycle_problem(Fraction(1), [Fraction(1), Fraction(0), Fraction(0)]))
    assert not sol.solved
    assert list(sol.residual.reshape(-1)) == [Fraction(1, 3)] * 3


def test_twisted_cycle_always_solvable():
    rng = np.random.default_rng(0)
    for _ in range(5):
        rhs = rng.normal(size=3) + 1j * rng.normal(size=3)
        p = cycle_problem(T03, rhs)
        sol = nerve_coboundary_solve(p)
        assert sol.solved
        D = coboundary_matrix(p)
        assert np.allclose(D @ sol.values.reshape(-1), rhs)


def test_K_is_inverse_smallest_singular_value():
    p = cycle_problem(T03, [1, 0, 0])
    fam = singular_vector_family(p)
    K = estimate_K(fam, norm="l2").K
    s = np.linalg.svd(coboundary_matrix(p), compute_uv=False)
    assert abs(K - 1 / s.min()) < 1e-10


def test_estimate_K_pure_coboundaries_match_pseudoinverse():
    # unit sup-norm coboundary right-hand sides: K is bounded by the pinv operator norm and attains
    # the ratio on each member exactly
    p = cycle_problem(T03, [1, 0, 0])
    D = coboundary_matrix(p)
    P = np.linalg.pinv(D)
    fam = []
    for k in range(3):
        e = np.zeros(3, complex)
        e[k] = 1
        fam.append(cycle_problem(T03, e))
    est = estimate_K(fam)
    want = max(np.abs(P[:, k]).max() for k in range(3))
    assert abs(est.K - want) < 1e-12


def test_estimate_K_zero_rhs_and_rejection():
    assert estimate_K([cycle_problem(1.0, [0, 0, 0])]).K == 0.0
    with pytest.raises(ValueError, match="bad"):
        bad = cycle_problem(1.0, [1, 0, 0])
        bad.name = "bad"
        estimate_K([bad])


def test_cocycle_check():
    tri = Nerve([1, 2, 3], [(1, 2), (2, 3), (1, 3)], [(1, 2, 3)])
    rng = np.random.default_rng(1)
    b = rng.normal(size=3)
    t = 1.0
    rhs = [np.array([b[0] - t * b[1]]), np.array([b[1] - t * b[2]]), np.array([b[0] - t * b[2]])]
    W = np.array([[t]])
    p = TwistedCochainProblem("nerve", 1, [W, W, W], rhs, nerve=tri)
    rep = cocycle_check(p)
    assert rep.passed and rep.max_violation < 1e-14
    rhs[2] = rhs[2] + 1e-3
    rep = cocycle_check(TwistedCochainProblem("nerve", 1, [W, W, W], rhs, nerve=tri))
    assert not rep.passed and abs(rep.max_violation - 1e-3) < 1e-12
    assert cocycle_check(cycle_problem(1.0, [1, 0, 0])).passed  # no triangles


def test_nerve_validation():
    with pytest.raises(ValueError):
        Nerve([1, 2], [(1, 3)])
    with pytest.raises(ValueError):
        Nerve([1, 2, 3], [(1, 2), (2, 3)], [(1, 2, 3)])
    with pytest.raises(ValueError):
        Nerve([1, 2], [(1, 2), (1, 2)])


def group_problem(weight, rhs_by_mode, translation=(0, 0)):
    return TwistedCochainProblem("group", 1, [np.array([[weight]])], [rhs_by_mode], translations=[translation])


def test_mode_solve_scalar():
    sol = mode_coboundary_solve(group_problem(T03, {(0, 0): np.array([1.0 + 0j])}))
    assert np.isclose(sol.values[(0, 0)][0], 1 / (1 - T03))


def test_mode_solve_exact():
    t = root_of_unity(3, 10)
    p = group_problem(t, {(0, 0): np.array([Fraction(1)], dtype=object)})
    sol = mode_coboundary_solve(p)
    assert sol.values[(0, 0)][0] == 1 / (1 - t)


def test_mode_solve_trivial_weight_obstruction():
    with pytest.raises(ObstructionNonzero) as err:
        mode_coboundary_solve(group_problem(1.0, {(0, 0): np.array([1.0 + 0j])}))
    assert err.value.mode == (0, 0) and err.value.component == 0


def test_mode_phase_moves_resonance():
    # weight 1 with translation c = (1/2, 0): mode (1, 0) has divisor 1 - e^{pi i} = 2
    p = group_problem(1.0, {(1, 0): np.array([1.0 + 0j]), (0, 1): np.array([0j])}, (0.5, 0.0))
    sol = mode_coboundary_solve(p)
    assert np.isclose(sol.values[(1, 0)][0], 0.5)


def test_nerve_and_group_models_agree():
    # one vertex with one loop edge versus one generator
    loop = Nerve(["v"], [("v", "v")])
    W = np.array([[T03]])
    h = np.array([0.7 - 0.2j])
    a = nerve_coboundary_solve(TwistedCochainProblem("nerve", 1, [W], [h], nerve=loop))
    b = mode_coboundary_solve(group_problem(T03, {(0, 0): h}))
    assert np.allclose(a.values[0], b.values[(0, 0)])


def test_group_cocycle_check_on_coboundary():
    rng = np.random.default_rng(2)
    Wa = np.diag(np.exp(2j * np.pi * rng.random(2)))
    Wb = np.diag(np.exp(2j * np.pi * rng.random(2)))
    F = rng.normal(size=2) + 0j
    p = TwistedCochainProblem("group", 2, [Wa, Wb], [{(0, 0): F - Wa @ F}, {(0, 0): F - Wb @ F}],
                              translations=[(0.1, 0), (0, 0.2)])
    assert group_cocycle_check(p).passed


def test_conditioning_gray_band():
    A = np.diag([1.0, 1e-10])
    with pytest.raises(ConditioningError):
        solve_min_norm(A, np.array([1.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_min_norm_properties(seed, m, n):
    rng = np.random.default_rng(seed)
    k = min(m, n) - 1 if min(m, n) > 1 else 1
    A = (rng.normal(size=(m, k)) @ rng.normal(size=(k, n))).astype(complex)
    x0 = rng.normal(size=n)
    b = A @ x0
    try:
        ls = solve_min_norm(A, b)
    except ConditioningError:
        return
    assert ls.status == "solved"
    assert np.allclose(A @ ls.x, b, atol=1e-9)
    # orthogonal to the kernel: the projector onto ker A kills x
    P = np.eye(n) - np.linalg.pinv(A) @ A
    assert np.abs(P @ ls.x).max() < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-3, 3), st.floats(-3, 3))
def test_divisor_bound(theta, re, im):
    # unitary scalar weight with divisor |1 - t|: |F| <= |h| / |1 - t|
    t = cmath.exp(2j * cmath.pi * theta)
    h = complex(re, im)
    sol = mode_coboundary_solve(group_problem(t, {(0, 0): np.array([h])}))
    assert abs(sol.values[(0, 0)][0]) <= abs(h) / abs(1 - t) * (1 + 1e-12) + 1e-15


def test_problem_from_json():
    data = {"model": "group", "dim": 1,
            "generators": [{"weight": [[[1, 0]]], "translation": ["1/2", 0], "rhs": [{"mode": [1, 0], "value": [[1, 0]]}]}]}
    p = TwistedCochainProblem.from_json(data, exact=True)
    sol = mode_coboundary_solve(p)
    assert sol.values[(1, 0)][0] == Fraction(1, 2)
