"""Independent reference implementations used as test oracles.

Everything here works on plain dicts {exponent tuple: coefficient} and brute
force loops, sharing no code with the package.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def poly_mul(a: dict, b: dict, N: int) -> dict:
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) <= N:
                out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + c
    return {e: c for e, c in out.items() if c != 0}


def poly_pow(a: dict, k: int, r: int, N: int) -> dict:
    out = {(0,) * r: 1}
    for _ in range(k):
        out = poly_mul(out, a, N)
    return out


def poly_compose(outer: dict, inner: list, N: int) -> dict:
    """outer(inner_1, ..., inner_r) truncated at total degree N."""
    r = len(inner)
    out = {}
    for e, c in outer.items():
        term = {(0,) * r: c}
        for lam, k in enumerate(e):
            term = poly_mul(term, poly_pow(inner[lam], k, r, N), N)
        out = poly_add(out, term)
    return out


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def l1_sphere_bruteforce(r: int, n: int) -> list:
    return [a for a in itertools.product(range(-n, n + 1), repeat=r) if sum(map(abs, a)) == n]


def l1_sphere_count(r: int, n: int) -> int:
    """Number of a in Z^r with sum |a_l| = n (n >= 1): sum_k 2^k C(r, k) C(n-1, k-1)."""
    return sum(2 ** k * math.comb(r, k) * math.comb(n - 1, k - 1) for k in range(1, r + 1))


def circle_dist(x: float) -> float:
    x = x % 1.0
    return min(x, 1.0 - x)


def shell_min_bruteforce(angle_rows, n: int):
    """min over |a|_1 = n of max_j || sum_l a_l theta_{l,j} ||."""
    r = len(angle_rows)
    g = len(angle_rows[0])
    best = math.inf
    for a in l1_sphere_bruteforce(r, n):
        d = max(circle_dist(sum(a[l] * angle_rows[l][j] for l in range(r))) for j in range(g))
        best = min(best, d)
    return best


def first_resonance_type(angles, N: int):
    """Smallest |alpha| - 1 with t^alpha = t_lambda, 2 <= |alpha| <= N, for rational angles; None if none."""
    angles = [Fraction(a) for a in angles]
    r = len(angles)
    for n in range(2, N + 1):
        for alpha in itertools.product(range(n + 1), repeat=r):
            if sum(alpha) != n:
                continue
            s = sum(a * t for a, t in zip(alpha, angles))
            for lam in range(r):
                if (s - angles[lam]).denominator == 1:
                    return n - 1
    return None
