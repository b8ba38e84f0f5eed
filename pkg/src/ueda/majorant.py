"""Majorant series for the normalizing coordinate change.

The plain majorant A(X) = sum_{|alpha|>=2} A_alpha X^alpha solves

    A = 2K A (-1 + G) + 2KM (-1 - R(X^1 + ... + X^r + rA) + G),
    G = prod_l 1 / (1 - R(X^l + A)),

and the weighted variant replaces the left side by sum eps^-1_{|alpha|-1} A_alpha X^alpha
and drops the factor K on the right.  The plain variant is computed as the
weighted one with eps^-1 identically 1/K, so both share one code path.

The right side at degree n only involves shells below n (the linear terms in A
cancel inside the second bracket), which makes the recursion explicit.  Very
fast growth is handled by the substitution X = Z/sigma, which maps (R, M) to
(R/sigma, M sigma) and A_alpha to sigma^(1-|alpha|) A_alpha; coefficients are
then also kept as logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundles import EpsilonSequence
from .series import TruncatedSeries, enumerate_multiindices, get_basis

__all__ = [
    "MajorantParams",
    "MajorantSeries",
    "TorsionDivisorError",
    "majorant_series",
    "weighted_majorant_series",
    "implicit_polynomial",
    "implicit_cross_check",
    "diagonal_bounds",
    "hat_series",
]

OVERFLOW_LIMIT = 1e250


class TorsionDivisorError(ValueError):
    """A needed eps^-1 vanishes, so the weighted recursion has no solution."""

    def __init__(self, index: int):
        super().__init__(f"torsion divisor: eps^-1_{index} = 0 (N_alpha trivial for |alpha| = {index})")
        self.index = index


@dataclass(frozen=True)
class MajorantParams:
    K: float
    M: float
    R: float
    r: int
    eps: EpsilonSequence | None = None

    def __post_init__(self):
        if not (self.K > 0 and self.M > 0 and self.R > 0):
            raise ValueError("K, M, R must be positive")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.eps is not None and not math.isclose(self.eps.K, self.K, rel_tol=1e-12):
            raise ValueError("epsilon sequence was built with a different K")

    def inverse_eps(self, n: int) -> float:
        """eps^-1_n, or 1/K for the plain variant."""
        if self.eps is None:
            return 1.0 / self.K
        return self.eps.inverse(n)


@dataclass
class MajorantSeries:
    params: MajorantParams
    N: int
    A: TruncatedSeries  # real coefficients stored in the scaled variable Z = sigma X
    sigma: float = 1.0
    log_coeffs: np.ndarray | None = None
    Bhat: np.ndarray | None = field(default=None)

    def coeff(self, alpha) -> float:
        a = float(self.A.coeff(alpha)[0].real)
        n = sum(alpha)
        return a * self.sigma ** (n - 1) if self.sigma != 1.0 else a

    def log_coeff(self, alpha) -> float:
        a = float(self.A.coeff(alpha)[0].real)
        return math.log(a) + (sum(alpha) - 1) * math.log(self.sigma)

    def items(self):
        """(alpha, A_alpha) for 2 <= |alpha| <= N in graded lexicographic order."""
        for n in range(2, self.N + 1):
            for alpha in enumerate_multiindices(self.params.r, n):
                yield alpha, self.coeff(alpha)

    def shell(self, n: int) -> np.ndarray:
        scale = self.sigma ** (n - 1)
        return self.A.shell(n)[:, 0].real * scale

    def B(self) -> np.ndarray:
        """B_n = sum_{|alpha|=n} A_alpha for n = 0..N (zeros below 2)."""
        out = np.zeros(self.N + 1)
        for n in range(2, self.N + 1):
            out[n] = self.shell(n).sum()
        return out

    def to_json(self) -> dict:
        p = self.params
        return {
            "K": p.K, "M": p.M, "R": p.R, "r": p.r, "N": self.N,
            "weighted": p.eps is not None,
            "sigma": self.sigma,
            "coefficients": [{"alpha": list(a), "value": v} for a, v in self.items()],
        }


def _geometric(y: TruncatedSeries, R: float, n: int) -> TruncatedSeries:
    """1/(1 - R y) through degree n by Horner-style repeated multiplication."""
    g = TruncatedSeries.constant(y.basis, 1.0)
    Ry = y * R
    for _ in range(n):
        g = 1.0 + Ry * g
    return g


def _rhs_shell(A: TruncatedSeries, R: float, M: float, r: int, n: int) -> np.ndarray:
    """Degree-n shell of 2A(-1+G) + 2M(-1 - R(sum X + rA) + G) on a degree-n basis."""
    b = A.basis
    X = [TruncatedSeries.variable(b, lam) for lam in range(r)]
    G = TruncatedSeries.constant(b, 1.0)
    for lam in range(r):
        G = G * _geometric(X[lam] + A, R, n)
    sumX = X[0]
    for lam in range(1, r):
        sumX = sumX + X[lam]
    first = A * (G - 1.0)
    second = G - 1.0 - (sumX + A * r) * R
    return (first * 2.0 + second * (2.0 * M)).shell(n)[:, 0].real


def _run_recursion(params: MajorantParams, N: int, R: float, M: float) -> TruncatedSeries:
    r = params.r
    full = get_basis(r, N)
    coeffs = np.zeros(full.size, dtype=complex)
    for n in range(2, N + 1):
        inv = params.inverse_eps(n - 1)
        if inv == 0:
            raise TorsionDivisorError(n - 1)
        b = get_basis(r, n)
        A = TruncatedSeries(get_basis(r, N), coeffs.copy()).rebase(b)
        with np.errstate(over="ignore", invalid="ignore"):
            shell = _rhs_shell(A, R, M, r, n)
        new = shell / inv
        coeffs[full.shells[n]] = new
        if not np.all(np.isfinite(new)) or np.max(new) > OVERFLOW_LIMIT:
            raise OverflowError(n)
    return TruncatedSeries(full, coeffs)


def _solve(params: MajorantParams, N: int) -> MajorantSeries:
    if N < 2:
        raise ValueError("N must be >= 2")
    sigma = 1.0
    for _ in range(8):
        try:
            A = _run_recursion(params, N, params.R / sigma, params.M * sigma)
        except OverflowError:
            # grow the variable scale and retry; every retry multiplies sigma by at least 1e10
            sigma *= 1e10 if sigma == 1.0 else sigma
            continue
        log = None
        if sigma != 1.0:
            log = np.array([math.log(float(v.real)) if v.real > 0 else -math.inf for v in A.coeffs[:, 0]])
            log = log + (A.basis.wdeg - 1) * math.log(sigma)
        return MajorantSeries(params, N, A, sigma, log)
    raise OverflowError("majorant coefficients overflow even after rescaling")


def majorant_series(params: MajorantParams, N: int) -> MajorantSeries:
    """Plain majorant recursion (any attached epsilon sequence is ignored)."""
    if params.eps is not None:
        params = MajorantParams(params.K, params.M, params.R, params.r)
    return _solve(params, N)


def weighted_majorant_series(params: MajorantParams, N: int) -> MajorantSeries:
    """eps-weighted majorant recursion."""
    if params.eps is None:
        raise ValueError("weighted recursion needs an epsilon sequence")
    if params.eps.n_max < N - 1:
        raise ValueError(f"epsilon sequence too short: need {N - 1}, have {params.eps.n_max}")
    return _solve(params, N)


def implicit_polynomial(params: MajorantParams) -> TruncatedSeries:
    """P(X, Y) as an exact polynomial in r + 1 variables (Y last)."""
    r, K, M, R = params.r, params.K, params.M, params.R
    b = get_basis(r + 1, r + 2)
    X = [TruncatedSeries.variable(b, lam) for lam in range(r)]
    Y = TruncatedSeries.variable(b, r)
    return _P(X, Y, K, M, R, r)


def _P(X, Y, K, M, R, r):
    Q = 1.0 - (X[0] + Y) * R
    sumX = X[0]
    for lam in range(1, r):
        Q = Q * (1.0 - (X[lam] + Y) * R)
        sumX = sumX + X[lam]
    return -(Q * Y) + Y * (1.0 - Q) * (2.0 * K) + (Q * (-1.0 - (sumX + Y * r) * R) + 1.0) * (2.0 * K * M)


def _P_Y(X, Y, K, M, R, r):
    Q = 1.0
    dQ = 0.0
    sumX = X[0]
    for lam in range(r):
        f = 1.0 - (X[lam] + Y) * R
        dQ = dQ * f + Q * (-R)
        Q = Q * f
        if lam:
            sumX = sumX + X[lam]
    L = -1.0 - (sumX + Y * r) * R
    return -(dQ * Y) - Q - Y * dQ * (2.0 * K) + (1.0 - Q) * (2.0 * K) + (dQ * L - Q * (r * R)) * (2.0 * K * M)


@dataclass
class CrossCheck:
    a: TruncatedSeries
    max_abs_deviation: float
    max_rel_deviation: float
    iterations: int


def implicit_cross_check(params: MajorantParams, N: int, series: MajorantSeries | None = None) -> CrossCheck:
    """Solve P(X, a(X)) = 0, a(0) = 0 by power-series Newton and compare with the recursion."""
    r, K, M, R = params.r, params.K, params.M, params.R
    b = get_basis(r, N)
    X = [TruncatedSeries.variable(b, lam) for lam in range(r)]
    a = TruncatedSeries.zeros(r, N)
    it = 0
    for it in range(1, 2 * (N.bit_length() + 2)):
        Pa = _P(X, a, K, M, R, r)
        step = Pa * _P_Y(X, a, K, M, R, r).reciprocal()
        a = a - step
        if step.max_abs() <= 1e-15 * max(1.0, a.max_abs()):
            break
    resid = _P(X, a, K, M, R, r)
    if resid.max_abs() > 1e-9 * max(1.0, a.max_abs()):
        raise ArithmeticError(f"Newton iteration did not converge (residual {resid.max_abs():.3e})")
    if series is None:
        series = majorant_series(params, N)
    dev_abs, dev_rel = 0.0, 0.0
    for n in range(2, N + 1):
        ours = series.shell(n)
        theirs = a.shell(n)[:, 0].real
        d = np.abs(ours - theirs)
        dev_abs = max(dev_abs, float(d.max()))
        dev_rel = max(dev_rel, float((d / np.abs(ours)).max()))
    return CrossCheck(a, dev_abs, dev_rel, it)


def _hat_once(params: MajorantParams, N: int, R: float, M: float) -> np.ndarray:
    r = params.r
    b = get_basis(1, N)
    c = np.zeros(N + 1)
    c[1] = 1.0
    for n in range(2, N + 1):
        inv = params.inverse_eps(n - 1)
        if inv == 0:
            raise TorsionDivisorError(n - 1)
        Bh = TruncatedSeries(b, c.astype(complex))
        with np.errstate(over="ignore", invalid="ignore"):
            g = _geometric(Bh, R, n) ** r
            rhs = Bh * (g - 1.0) * 2.0 + (g - 1.0 - Bh * (r * R)) * (2.0 * M)
        c[n] = rhs.coeffs[n, 0].real / inv
        if not math.isfinite(c[n]) or c[n] > OVERFLOW_LIMIT:
            raise OverflowError(n)
    return c


def hat_series(params: MajorantParams, N: int):
    """Coefficients of B^(Y) = Y + sum B^_n Y^n as (log values, values) for n = 0..N."""
    sigma = 1.0
    for _ in range(8):
        try:
            c = _hat_once(params, N, params.R / sigma, params.M * sigma)
        except OverflowError:
            sigma *= 1e10 if sigma == 1.0 else sigma
            continue
        n = np.arange(N + 1)
        with np.errstate(divide="ignore"):
            logs = np.log(c) + (n - 1) * math.log(sigma)
        logs[0] = -math.inf
        with np.errstate(over="ignore"):
            vals = np.exp(logs)
        return logs, vals
    raise OverflowError("hat coefficients overflow even after rescaling")


@dataclass
class DiagonalBounds:
    variant: str
    values: np.ndarray  # index n = 0..N
    log_values: np.ndarray
    radius_estimate: float
    note: str = "ratio-test estimate over the last ceil(N/3) shells; not a certificate"

    def ratios(self) -> np.ndarray:
        """Successive ratios value_{n-1} / value_n (nan where undefined)."""
        out = np.full(len(self.values), np.nan)
        for n in range(3, len(self.values)):
            out[n] = math.exp(self.log_values[n - 1] - self.log_values[n])
        return out


def _radius(logs: np.ndarray, N: int) -> float:
    tail = math.ceil(N / 3)
    n0 = max(2, N - tail)
    if N <= n0 or not np.isfinite(logs[N]) or not np.isfinite(logs[n0]):
        return math.nan
    return math.exp((logs[n0] - logs[N]) / (N - n0))


def diagonal_bounds(series: MajorantSeries, variant: str = "plain") -> DiagonalBounds:
    """B_n (variant "plain") or B^_n (variant "hat") with a radius estimate."""
    N = series.N
    if variant == "plain":
        if series.log_coeffs is not None:
            b = series.A.basis
            logs = np.full(N + 1, -math.inf)
            for n in range(2, N + 1):
                sl = series.log_coeffs[b.shells[n]]
                mx = sl.max()
                logs[n] = mx + math.log(np.exp(sl - mx).sum())
            with np.errstate(over="ignore"):
                vals = np.exp(logs)  # inf where only the logarithm is representable
        else:
            vals = series.B()
            with np.errstate(divide="ignore"):
                logs = np.log(vals)
        return DiagonalBounds("plain", vals, logs, _radius(logs, N))
    if variant == "hat":
        logs, vals = hat_series(series.params, N)
        series.Bhat = vals
        logs = logs.copy()
        logs[1] = -math.inf
        vals = vals.copy()
        vals[1] = 0.0
        return DiagonalBounds("hat", vals, logs, _radius(logs, N))
    raise ValueError(f"unknown variant {variant!r}")
