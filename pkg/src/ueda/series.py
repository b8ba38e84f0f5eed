"""Truncated multivariate power series.

A series lives on a :class:`Basis`: all monomials w^alpha q^kappa with
|alpha| <= N in the r "coordinate" variables w and |kappa| <= M in p optional
"parameter" variables q.  The parameter variables carry Fourier modes of
coefficient functions (q = exp(2 pi i x) on a real torus) and are never
inverted, so truncating both degrees separately is a ring quotient and products
of truncated series are exact below the bounds.

Coefficients are stored densely, one row per monomial and one column per
component, either as complex128 or (exact mode) as an object array holding
ints, Fractions and :class:`~ueda.cyclotomic.Cyclotomic` numbers.  Monomials
are ordered by w-degree shell, graded lexicographically inside a shell, then by
parameter degree.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np


__all__ = [
    "Basis",
    "get_basis",
    "enumerate_multiindices",
    "TruncatedSeries",
    "compose",
    "SymPowerTransition",
    "symmetric_transition",
    "is_exact_array",
    "to_complex_array",
    "conj_transpose",
]

UNITARY_TOL = 1e-12


def enumerate_multiindices(r: int, n: int) -> list[tuple[int, ...]]:
    """All alpha in Z_{>=0}^r with |alpha| = n, graded lexicographic order.

    >>> enumerate_multiindices(2, 2)
    [(2, 0), (1, 1), (0, 2)]
    """
    if r < 1 or n < 0:
        raise ValueError("need r >= 1 and n >= 0")
    if r == 1:
        return [(n,)]
    out = []
    for first in range(n, -1, -1):
        for rest in enumerate_multiindices(r - 1, n - first):
            out.append((first,) + rest)
    return out


def _indices_upto(r: int, n: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(n + 1):
        out.extend(enumerate_multiindices(r, d))
    return out


class Basis:
    """Monomial basis with w-degree <= N and parameter degree <= M."""

    def __init__(self, r: int, N: int, p: int = 0, M: int = 0):
        if r < 1 or N < 0 or p < 0 or M < 0:
            raise ValueError("invalid basis dimensions")
        self.r, self.N, self.p, self.M = r, N, p, M
        qidx = _indices_upto(p, M) if p else [()]
        exps = []
        shell_bounds = []
        for d in range(N + 1):
            start = len(exps)
            for a in enumerate_multiindices(r, d):
                for k in qidx:
                    exps.append(a + k)
            shell_bounds.append((start, len(exps)))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), r + p)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.shells = [slice(a, b) for a, b in shell_bounds]
        self.wdeg = self.exps[:, :r].sum(axis=1)
        self.qdeg = self.exps[:, r:].sum(axis=1) if p else np.zeros(self.size, dtype=np.int64)
        self._table = None
        self._parents = None

    @property
    def nvars(self) -> int:
        return self.r + self.p

    def shell_indices(self, n: int) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in e) for e in self.exps[self.shells[n]]]

    def product_table(self):
        """Index triples (i, j, k) with e_i + e_j = e_k, grouped by k."""
        if self._table is None:
            I, J, K = [], [], []
            for i, ei in enumerate(self.exps):
                di, qi = self.wdeg[i], self.qdeg[i]
                ok = (self.wdeg + di <= self.N) & (self.qdeg + qi <= self.M)
                for j in np.nonzero(ok)[0]:
                    I.append(i)
                    J.append(j)
                    K.append(self.index[tuple(int(x) for x in ei + self.exps[j])])
            I, J, K = (np.array(x, dtype=np.int64) for x in (I, J, K))
            order = np.argsort(K, kind="stable")
            I, J, K = I[order], J[order], K[order]
            targets, starts = np.unique(K, return_index=True)
            self._table = (I, J, K, starts, targets)
        return self._table

    def parents(self):
        """For each monomial e != 0: (index of e - e_v, v) with v its first nonzero variable."""
        if self._parents is None:
            par = np.full(self.size, -1, dtype=np.int64)
            var = np.full(self.size, -1, dtype=np.int64)
            for i, e in enumerate(self.exps):
                nz = np.nonzero(e)[0]
                if len(nz):
                    v = int(nz[0])
                    f = list(int(x) for x in e)
                    f[v] -= 1
                    par[i] = self.index[tuple(f)]
                    var[i] = v
            self._parents = (par, var)
        return self._parents


@lru_cache(maxsize=None)
def _cached_basis(r: int, N: int, p: int, M: int) -> Basis:
    return Basis(r, N, p, M)


def get_basis(r: int, N: int, p: int = 0, M: int = 0) -> Basis:
    """Shared basis instance (series on equal bases are compatible by identity)."""
    return _cached_basis(int(r), int(N), int(p), int(M))


def is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


def to_complex_array(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return np.vectorize(complex, otypes=[complex])(a) if a.size else a.astype(complex)
    return a.astype(complex)


def _conj(x):
    return x.conjugate()


def conj_transpose(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T)
    if T.dtype == object:
        out = np.empty((T.shape[1], T.shape[0]), dtype=object)
        for i in range(T.shape[0]):
            for j in range(T.shape[1]):
                out[j, i] = _conj(T[i, j])
        return out
    return T.conj().T


def _zeros(shape, exact: bool):
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(0)
        return out
    return np.zeros(shape, dtype=complex)


def _nonzero_mask(a: np.ndarray) -> np.ndarray:
    if a.dtype == object:
        return np.array([x != 0 for x in a.reshape(-1)], dtype=bool).reshape(a.shape)
    return a != 0


def _raw_product(basis: Basis, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product of coefficient arrays; a, b are (n,) or (n, m)."""
    I, J, K, starts, targets = basis.product_table()
    exact = a.dtype == object or b.dtype == object
    if a.ndim == 1 and b.ndim == 2:
        a = a[:, None]
    if b.ndim == 1 and a.ndim == 2:
        b = b[:, None]
    m = a.shape[1] if a.ndim == 2 else None
    shape = (basis.size,) if m is None else (basis.size, m)
    out = _zeros(shape, exact)
    if exact:
        na = _nonzero_mask(a) if a.ndim == 1 else _nonzero_mask(a).any(axis=1)
        nb = _nonzero_mask(b) if b.ndim == 1 else _nonzero_mask(b).any(axis=1)
        keep = na[I] & nb[J]
        if not keep.any():
            return out
        I, J, K = I[keep], J[keep], K[keep]
        targets, starts = np.unique(K, return_index=True)
    prod = a[I] * b[J]
    out[targets] = np.add.reduceat(prod, starts, axis=0)
    return out


class TruncatedSeries:
    """Vector-valued truncated power series with m components.

    ``coeffs`` has shape (basis.size, m).  Instances are treated as immutable;
    every operation returns a new series.
    """

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis: Basis, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] != basis.size:
            raise ValueError("coefficient rows do not match the basis")
        if coeffs.dtype != object and coeffs.dtype != complex:
            coeffs = coeffs.astype(complex)
        self.basis = basis
        self.coeffs = coeffs

    # construction -----------------------------------------------------------
    @classmethod
    def zeros(cls, r, N, m=1, p=0, M=0, exact=False):
        b = get_basis(r, N, p, M)
        return cls(b, _zeros((b.size, m), exact))

    @classmethod
    def constant(cls, basis: Basis, value, m=1):
        exact = not isinstance(value, (float, complex, np.floating, np.complexfloating))
        c = _zeros((basis.size, m), exact)
        c[0, :] = value
        return cls(basis, c)

    @classmethod
    def variable(cls, basis: Basis, v: int, exact=False):
        c = _zeros((basis.size, 1), exact)
        e = [0] * basis.nvars
        e[v] = 1
        c[basis.index[tuple(e)], 0] = 1
        return cls(basis, c)

    @classmethod
    def identity(cls, r, N, p=0, M=0, exact=False):
        """The vector series w -> w (m = r components)."""
        b = get_basis(r, N, p, M)
        c = _zeros((b.size, r), exact)
        for lam in range(r):
            e = [0] * b.nvars
            e[lam] = 1
            c[b.index[tuple(e)], lam] = 1
        return cls(b, c)

    @classmethod
    def from_terms(cls, basis: Basis, terms, m: int, exact=False):
        """Build from an iterable of (exponent tuple, length-m vector)."""
        c = _zeros((basis.size, m), exact)
        for alpha, vec in terms:
            alpha = tuple(int(x) for x in alpha)
            if len(alpha) == basis.r and basis.p:
                alpha = alpha + (0,) * basis.p
            if alpha not in basis.index:
                raise ValueError(f"monomial {alpha} outside the truncation")
            vec = list(vec)
            if len(vec) != m:
                raise ValueError("coefficient vector has the wrong length")
            i = basis.index[alpha]
            for k, x in enumerate(vec):
                c[i, k] = c[i, k] + x
        return cls(basis, c)

    # basic properties -------------------------------------------------------
    @property
    def r(self):
        return self.basis.r

    @property
    def N(self):
        return self.basis.N

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def exact(self) -> bool:
        return self.coeffs.dtype == object

    def copy(self):
        return TruncatedSeries(self.basis, self.coeffs.copy())

    def component(self, k: int) -> "TruncatedSeries":
        return TruncatedSeries(self.basis, self.coeffs[:, k : k + 1].copy())

    def components(self) -> list["TruncatedSeries"]:
        return [self.component(k) for k in range(self.m)]

    @classmethod
    def stack(cls, parts: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        basis = parts[0].basis
        return cls(basis, np.concatenate([s.coeffs for s in parts], axis=1))

    def coeff(self, alpha) -> np.ndarray:
        alpha = tuple(int(x) for x in alpha)
        if len(alpha) == self.basis.r and self.basis.p:
            alpha = alpha + (0,) * self.basis.p
        i = self.basis.index.get(alpha)
        if i is None:
            return _zeros((self.m,), self.exact)
        return self.coeffs[i]

    def terms(self):
        """Nonzero (exponent tuple, coefficient vector) pairs in basis order."""
        nz = _nonzero_mask(self.coeffs).any(axis=1)
        for i in np.nonzero(nz)[0]:
            yield tuple(int(x) for x in self.basis.exps[i]), self.coeffs[i]

    def shell(self, n: int) -> np.ndarray:
        """Coefficient block of w-degree n, shape (shell size, m)."""
        if n > self.N:
            return _zeros((0, self.m), self.exact)
        return self.coeffs[self.basis.shells[n]]

    def with_shell(self, n: int, block) -> "TruncatedSeries":
        c = self.coeffs.copy()
        c[self.basis.shells[n]] = block
        return TruncatedSeries(self.basis, c)

    def order(self) -> int | None:
        """Lowest w-degree carrying a nonzero coefficient, or None for zero."""
        nz = _nonzero_mask(self.coeffs).any(axis=1)
        idx = np.nonzero(nz)[0]
        return None if len(idx) == 0 else int(self.basis.wdeg[idx[0]])

    def truncate(self, n: int) -> "TruncatedSeries":
        """Zero all coefficients of w-degree > n (same basis)."""
        c = self.coeffs.copy()
        if n < self.N:
            c[self.basis.shells[n + 1].start :] = 0
        return TruncatedSeries(self.basis, c)

    def rebase(self, basis: Basis) -> "TruncatedSeries":
        """Move to another basis over the same variables, dropping what does not fit."""
        if basis.r != self.basis.r or basis.p != self.basis.p:
            raise ValueError("variable counts differ")
        c = _zeros((basis.size, self.m), self.exact)
        for i, e in enumerate(self.basis.exps):
            j = basis.index.get(tuple(int(x) for x in e))
            if j is not None:
                c[j] = self.coeffs[i]
        return TruncatedSeries(basis, c)

    def to_complex(self) -> "TruncatedSeries":
        return TruncatedSeries(self.basis, to_complex_array(self.coeffs))

    def max_abs(self) -> float:
        if self.coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(to_complex_array(self.coeffs))))

    def is_zero(self) -> bool:
        return not _nonzero_mask(self.coeffs).any()

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "TruncatedSeries"):
        if other.basis is not self.basis:
            raise ValueError("series live on different bases")

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return TruncatedSeries(self.basis, self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return TruncatedSeries(self.basis, c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.basis, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Product with a scalar, or with a series (scalar-by-vector broadcast or componentwise)."""
        if isinstance(other, TruncatedSeries):
            self._check(other)
            if self.m != other.m and 1 not in (self.m, other.m):
                raise ValueError("component counts are incompatible")
            a = self.coeffs[:, 0] if self.m == 1 else self.coeffs
            b = other.coeffs[:, 0] if other.m == 1 else other.coeffs
            return TruncatedSeries(self.basis, _raw_product(self.basis, a, b))
        return TruncatedSeries(self.basis, self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return TruncatedSeries(self.basis, self.coeffs / scalar)

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = TruncatedSeries.constant(self.basis, 1 if self.exact else 1.0, self.m)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def apply_matrix(self, T) -> "TruncatedSeries":
        """Left-multiply the coefficient vectors by a matrix: (T s)(w) = T s(w)."""
        T = np.asarray(T)
        if T.dtype == object or self.exact:
            c = self.coeffs.astype(object) @ T.astype(object).T
            return TruncatedSeries(self.basis, c)
        return TruncatedSeries(self.basis, self.coeffs @ T.T)

    def reciprocal(self) -> "TruncatedSeries":
        """1/s for a scalar series with invertible constant term (Newton doubling)."""
        if self.m != 1:
            raise ValueError("reciprocal needs a scalar series")
        c0 = self.coeffs[0, 0]
        if c0 == 0:
            raise ZeroDivisionError("constant term vanishes")
        g = TruncatedSeries.constant(self.basis, 1 / c0)
        two = 2 if self.exact else 2.0
        prec = 1
        total = self.basis.N + self.basis.M + 1
        while prec < total:
            g = g * (two - self * g)
            prec *= 2
        return g

    def exp(self) -> "TruncatedSeries":
        """exp(s) for a scalar series with zero constant term."""
        if self.m != 1:
            raise ValueError("exp needs a scalar series")
        if self.coeffs[0, 0] != 0:
            raise ValueError("exp needs a zero constant term")
        out = TruncatedSeries.constant(self.basis, 1 if self.exact else 1.0)
        term = out
        for k in range(1, self.basis.N + self.basis.M + 1):
            term = term * self / (Fraction(1) * k if self.exact else k)
            if term.is_zero():
                break
            out = out + term
        return out

    def compose(self, inner: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        return compose(self, inner)

    def compose_w(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """Substitute a vector series for the w-variables, keeping parameters fixed."""
        b = inner.basis
        parts = inner.components()
        for v in range(b.p):
            parts.append(TruncatedSeries.variable(b, b.r + v, exact=inner.exact))
        return compose(self, parts)

    def reverse(self) -> "TruncatedSeries":
        """Inverse of w = u + G(u) (identity linear part), parameters held fixed."""
        b = self.basis
        if self.m != b.r:
            raise ValueError("reverse needs an r-component series")
        ident = TruncatedSeries.identity(b.r, b.N, b.p, b.M, exact=self.exact)
        lin = self.shell(1) if b.N >= 1 else None
        if lin is not None:
            diff = lin - ident.shell(1)
            if _nonzero_mask(diff).any():
                raise ValueError("linear part is not the identity; factor it out first")
        if _nonzero_mask(self.shell(0)).any():
            raise ValueError("series has a constant term")
        G = self - ident
        u = ident
        for _ in range(b.N):
            u = ident - G.compose_w(u)
        return u

    # serialization -------------------------------------------------------------
    def to_json(self) -> dict:
        out = {"r": self.basis.r, "N": self.basis.N, "components": self.m}
        if self.basis.p:
            out["parameters"] = self.basis.p
            out["parameter_degree"] = self.basis.M
        terms = []
        for e, vec in self.terms():
            t = {"alpha": list(e[: self.basis.r])}
            if self.basis.p:
                t["mode"] = list(e[self.basis.r :])
            t["coeff"] = [scalar_to_json(z) for z in vec]
            terms.append(t)
        out["terms"] = terms
        return out

    @classmethod
    def from_json(cls, data: dict, exact: bool = False) -> "TruncatedSeries":
        r, N, m = int(data["r"]), int(data["N"]), int(data.get("components", 1))
        p, M = int(data.get("parameters", 0)), int(data.get("parameter_degree", 0))
        basis = get_basis(r, N, p, M)
        terms = []
        for t in data.get("terms", []):
            e = tuple(t["alpha"]) + tuple(t.get("mode", [0] * p))
            vec = [parse_scalar(z, exact) for z in t["coeff"]]
            terms.append((e, vec))
        return cls.from_terms(basis, terms, m, exact=exact)

    def __repr__(self):
        return f"TruncatedSeries(r={self.basis.r}, N={self.basis.N}, m={self.m}, nnz={sum(1 for _ in self.terms())})"


def scalar_to_json(z):
    """[re, im] for floats and rationals (as strings), or {"root": n, "coeffs": [...]} for Q(zeta_n)."""
    from .cyclotomic import Cyclotomic

    if isinstance(z, Cyclotomic):
        return {"root": z.n, "coeffs": [str(c) for c in z.c]}
    if isinstance(z, (int, Fraction)):
        return [str(Fraction(z)), "0"]
    z = complex(z)
    return [z.real, z.imag]


def parse_scalar(z, exact: bool):
    """Parse [re, im] (numbers or strings such as "1/3") or an exact {"root", "coeffs"} scalar."""
    if isinstance(z, dict):
        from .cyclotomic import from_power_basis

        x = from_power_basis(int(z["root"]), z["coeffs"])
        return x if exact else complex(x)
    if isinstance(z, (list, tuple)):
        re, im = z
    else:
        re, im = z, 0
    if exact:
        from .cyclotomic import gaussian

        return gaussian(Fraction(str(re)) if not isinstance(re, Fraction) else re,
                        Fraction(str(im)) if not isinstance(im, Fraction) else im)
    return complex(float(Fraction(str(re))), float(Fraction(str(im))))


def compose(outer: TruncatedSeries, inner: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """outer(inner_1, ..., inner_k), truncated on the inner basis.

    ``inner`` lists one scalar series per outer variable (w-variables first,
    then parameters).  Each inner w-component must have w-order >= 1 and each
    parameter component parameter order >= 1, so that nothing beyond the
    truncation of ``outer`` can feed back below the bounds.
    """
    ob = outer.basis
    if len(inner) != ob.nvars:
        raise ValueError(f"need {ob.nvars} inner components, got {len(inner)}")
    ib = inner[0].basis
    for s in inner:
        if s.basis is not ib or s.m != 1:
            raise ValueError("inner components must be scalar series on a common basis")
    if ib.p != ob.p:
        raise ValueError("parameter counts differ")
    for v, s in enumerate(inner):
        mask = _nonzero_mask(s.coeffs[:, 0])
        if v < ob.r:
            bad = mask & (ib.wdeg == 0)
            if bad.any():
                raise ValueError("inner series has a nonzero constant term")
        else:
            bad = mask & (ib.qdeg == 0)
            if bad.any():
                raise ValueError("parameter substitution must have parameter order >= 1")
    exact = outer.exact or any(s.exact for s in inner)
    par, var = ob.parents()
    needed = _nonzero_mask(outer.coeffs).any(axis=1)
    # mark ancestors of every monomial that carries a coefficient
    for i in range(ob.size - 1, 0, -1):
        if needed[i]:
            needed[par[i]] = True
    vals = _zeros((ob.size, ib.size), exact)
    vals[0, 0] = 1
    comps = [s.coeffs[:, 0] for s in inner]
    for i in range(1, ob.size):
        if needed[i]:
            vals[i] = _raw_product(ib, vals[par[i]], comps[var[i]])
    rows = np.nonzero(needed)[0]
    oc = outer.coeffs[rows]
    V = vals[rows].T
    if exact:
        out = V.astype(object) @ oc.astype(object)
    else:
        out = V @ oc
    return TruncatedSeries(ib, out)


class SymPowerTransition:
    """tau(T) on degree-n monomials: rows alpha, columns beta.

    tau[alpha, beta] is the coefficient of x^beta in prod_l (sum_m T[l, m] x_m)^alpha_l,
    so tau(T S) = tau(T) tau(S).
    """

    def __init__(self, T: np.ndarray, n: int, tau: np.ndarray, indices):
        self.T = T
        self.n = n
        self.tau = tau
        self.indices = indices

    def weights(self) -> np.ndarray:
        return np.array([math.sqrt(math.factorial(self.n) / math.prod(math.factorial(a) for a in al))
                         for al in self.indices])

    def scaled(self) -> np.ndarray:
        """Matrix in the frame sqrt(n!/alpha!) e^alpha; unitary when T is."""
        w = self.weights()
        t = to_complex_array(self.tau)
        return (t * w[:, None]) / w[None, :]


def check_unitary(T, tol: float = UNITARY_TOL) -> float:
    Tc = to_complex_array(T)
    err = float(np.linalg.norm(Tc.conj().T @ Tc - np.eye(Tc.shape[0]), ord=2))
    if err > tol:
        raise ValueError(f"matrix is not unitary: ||T^H T - I|| = {err:.3e}")
    return err


def symmetric_transition(T, n: int, check: bool = True) -> SymPowerTransition:
    T = np.asarray(T)
    if T.dtype != object:
        T = T.astype(complex)
    r = T.shape[0]
    if T.shape != (r, r):
        raise ValueError("T must be square")
    if check:
        check_unitary(T)
    exact = T.dtype == object
    b = get_basis(r, n)
    indices = enumerate_multiindices(r, n)
    forms = []
    for lam in range(r):
        terms = []
        for mu in range(r):
            e = [0] * r
            e[mu] = 1
            vec = [T[lam, mu]]
            terms.append((tuple(e), vec))
        forms.append(TruncatedSeries.from_terms(b, terms, 1, exact=exact))
    tau = _zeros((len(indices), len(indices)), exact)
    for i, alpha in enumerate(indices):
        prod = TruncatedSeries.constant(b, 1 if exact else 1.0)
        for lam, a in enumerate(alpha):
            if a:
                prod = prod * forms[lam] ** a
        tau[i] = prod.shell(n)[:, 0]
    return SymPowerTransition(T, n, tau, indices)
