"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Elements are stored as coefficient vectors in the power basis
1, zeta, ..., zeta^(phi(n)-1), reduced modulo the n-th cyclotomic polynomial,
so equality (and in particular the zero test used for resonance decisions) is
exact.  Rational results are demoted to :class:`fractions.Fraction`, which keeps
purely rational computations (e.g. series reversion) on the fast path.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache

__all__ = ["Cyclotomic", "root_of_unity", "gaussian", "conj", "is_exact_scalar"]


def _poly_divmod_int(num, den):
    """Exact division of integer polynomials (lists, low degree first)."""
    num = list(num)
    q = [0] * max(len(num) - len(den) + 1, 1)
    for k in range(len(num) - len(den), -1, -1):
        c = num[k + len(den) - 1] // den[-1]
        q[k] = c
        for i, d in enumerate(den):
            num[k + i] -= c * d
    return q, num


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple:
    """Integer coefficients of Phi_n, lowest degree first."""
    p = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            p, rem = _poly_divmod_int(p, cyclotomic_poly(d))
            assert not any(rem)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


@lru_cache(maxsize=None)
def _phi(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


@lru_cache(maxsize=None)
def _zeta_powers(n: int) -> tuple:
    return tuple(cmath.exp(2j * math.pi * k / n) for k in range(_phi(n)))


def _reduce(p: list, n: int) -> tuple:
    phi = cyclotomic_poly(n)
    deg = len(phi) - 1
    p = list(p)
    for k in range(len(p) - 1, deg - 1, -1):
        c = p[k]
        if c:
            s = k - deg
            for i in range(deg + 1):
                p[s + i] -= c * phi[i]
    p = p[:deg] + [Fraction(0)] * max(0, deg - len(p))
    return tuple(Fraction(x) for x in p)


def _lift(c: tuple, n: int, L: int) -> tuple:
    if n == L:
        return c
    step = L // n
    p = [Fraction(0)] * (step * (len(c) - 1) + 1)
    for k, x in enumerate(c):
        p[k * step] = x
    return _reduce(p, L)


def _polymul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _polydivmod(a, b):
    a = _trim(a)
    b = _trim(b)
    if len(a) < len(b):
        return [Fraction(0)], a
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    lead = b[-1]
    for k in range(len(a) - len(b), -1, -1):
        c = a[k + len(b) - 1] / lead
        q[k] = c
        for i, d in enumerate(b):
            a[k + i] -= c * d
    return q, _trim(a[: len(b) - 1])


def _polysub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


def _inverse_mod(c: tuple, n: int) -> tuple:
    # extended Euclid in Q[x] against Phi_n
    r0, r1 = [Fraction(x) for x in cyclotomic_poly(n)], _trim(c)
    s0, s1 = [Fraction(0)], [Fraction(1)]
    while len(r1) > 1:
        q, r = _polydivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _polysub(s0, _polymul(q, s1))
    if not r1:
        raise ZeroDivisionError("division by zero in cyclotomic field")
    inv = [x / r1[0] for x in s1]
    return _reduce(inv, n)


class Cyclotomic:
    """An element of Q(zeta_n), zeta_n = exp(2 pi i / n)."""

    __slots__ = ("n", "c")

    def __init__(self, n: int, coeffs):
        self.n = int(n)
        self.c = _reduce([Fraction(x) for x in coeffs], self.n)

    @classmethod
    def _raw(cls, n, c):
        if not any(c[1:]):
            return c[0] if c else Fraction(0)
        obj = object.__new__(cls)
        obj.n = n
        obj.c = c
        return obj

    @staticmethod
    def _coerce(other):
        if isinstance(other, Cyclotomic):
            return other.n, other.c
        if isinstance(other, (int, Fraction)):
            return 1, (Fraction(other),)
        return None

    def _common(self, other):
        o = self._coerce(other)
        if o is None:
            return None
        n2, c2 = o
        if n2 == 1:
            return self.n, self.c, (c2[0],) + (Fraction(0),) * (len(self.c) - 1)
        L = math.lcm(self.n, n2)
        return L, _lift(self.c, self.n, L), _lift(c2, n2, L)

    def __add__(self, other):
        t = self._common(other)
        if t is None:
            return NotImplemented
        L, a, b = t
        return Cyclotomic._raw(L, tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic._raw(self.n, tuple(-x for x in self.c))

    def __pos__(self):
        return self

    def __sub__(self, other):
        t = self._common(other)
        if t is None:
            return NotImplemented
        L, a, b = t
        return Cyclotomic._raw(L, tuple(x - y for x, y in zip(a, b)))

    def __rsub__(self, other):
        t = self._common(other)
        if t is None:
            return NotImplemented
        L, a, b = t
        return Cyclotomic._raw(L, tuple(y - x for x, y in zip(a, b)))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Fraction(0)
            return Cyclotomic._raw(self.n, tuple(x * other for x in self.c))
        t = self._common(other)
        if t is None:
            return NotImplemented
        L, a, b = t
        return Cyclotomic._raw(L, _reduce(_polymul(a, b), L))

    __rmul__ = __mul__

    def inverse(self):
        return Cyclotomic._raw(self.n, _inverse_mod(self.c, self.n))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic._raw(self.n, tuple(x / other for x in self.c))
        if isinstance(other, Cyclotomic):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out, base = Fraction(1), self
        while k:
            if k & 1:
                out = base * out
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        t = self._common(other)
        if t is None:
            if isinstance(other, (complex, float)):
                return complex(self) == other
            return NotImplemented
        _, a, b = t
        return a == b

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def __bool__(self):
        return any(self.c)

    def conjugate(self):
        """Complex conjugate, i.e. the Galois automorphism zeta -> zeta^-1."""
        n = self.n
        p = [Fraction(0)] * n
        for k, x in enumerate(self.c):
            p[(-k) % n] += x
        return Cyclotomic._raw(n, _reduce(p, n))

    def __complex__(self):
        return complex(sum(float(x) * z for x, z in zip(self.c, _zeta_powers(self.n))))

    def __abs__(self):
        return abs(complex(self))

    @property
    def real(self):
        return complex(self).real

    @property
    def imag(self):
        return complex(self).imag

    def __repr__(self):
        terms = [f"{x}*z{self.n}^{k}" for k, x in enumerate(self.c) if x]
        return "Cyclotomic(" + (" + ".join(terms) or "0") + ")"


def root_of_unity(p: int, q: int):
    """exp(2 pi i p / q) as an exact element."""
    q = int(q)
    p = int(p) % q
    g = math.gcd(p, q)
    p, q = p // g, q // g
    if q == 1:
        return Fraction(1)
    if q == 2:
        return Fraction(-1)
    deg = _phi(q)
    poly = [Fraction(0)] * (p + 1)
    poly[p] = Fraction(1)
    return Cyclotomic._raw(q, _reduce(poly, q) if p >= deg else tuple(poly + [Fraction(0)] * (deg - p - 1)))


def gaussian(re, im=0):
    """re + i*im with rational parts."""
    re, im = Fraction(re), Fraction(im)
    if im == 0:
        return re
    return Cyclotomic._raw(4, (re, im))


def from_power_basis(n: int, coeffs):
    """sum_k coeffs[k] zeta_n^k, demoted to Fraction when rational."""
    c = _reduce([Fraction(x) for x in coeffs], int(n))
    return Cyclotomic._raw(int(n), c)


def conj(x):
    return x.conjugate()


def is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction, Cyclotomic))
