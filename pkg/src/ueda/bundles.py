"""Unitary flat line bundles on a genus-g curve and their Diophantine classes.

A flat line bundle is stored by its monodromy angles theta in [0, 1)^(2g), one
per generator of the first homology, with monodromy exp(2 pi i theta).  Angles
are either floats or :class:`fractions.Fraction` (exact mode).  Signed
multi-indices a in Z^r combine a tuple of bundles into the tensor product
prod_l L_l^(a_l); their size |a| is the l1 norm.

The invariant distance is the sup over generators of the circle distance,
which satisfies 4*dist <= |exp(2 pi i x) - 1| <= 2 pi * dist.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .series import enumerate_multiindices

__all__ = [
    "FlatLineBundle",
    "FlatBundleTuple",
    "EpsilonSequence",
    "ClassificationReport",
    "SiegelReport",
    "bundle_combine",
    "invariant_distance",
    "circle_distance",
    "l1_sphere",
    "shell_minima",
    "classify",
    "epsilon_sequence",
    "siegel_check",
    "subadditivity_pairs",
    "monodromy_equivalent",
    "golden_tuple",
    "ZERO_TOL",
]

# float distances below this count as exact zeros (a trivial combination)
ZERO_TOL = 1e-12


def _reduce_angle(x):
    if isinstance(x, Fraction):
        return x - math.floor(x)
    if isinstance(x, int):
        return Fraction(0)
    x = float(x) % 1.0
    return 0.0 if x == 1.0 else x


def circle_distance(x):
    """Distance from x to the nearest integer."""
    x = _reduce_angle(x)
    return min(x, 1 - x)


@dataclass(frozen=True)
class FlatLineBundle:
    genus: int
    angles: tuple

    def __post_init__(self):
        angles = tuple(_reduce_angle(a) for a in self.angles)
        if len(angles) != 2 * self.genus:
            raise ValueError(f"genus {self.genus} needs {2 * self.genus} angles, got {len(angles)}")
        object.__setattr__(self, "angles", angles)

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Fraction) for a in self.angles)

    def monodromy(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.array([float(a) for a in self.angles]))

    def tensor(self, other: "FlatLineBundle") -> "FlatLineBundle":
        if other.genus != self.genus:
            raise ValueError("genus mismatch")
        return FlatLineBundle(self.genus, tuple(a + b for a, b in zip(self.angles, other.angles)))

    def dual(self) -> "FlatLineBundle":
        return FlatLineBundle(self.genus, tuple(-a for a in self.angles))

    @classmethod
    def trivial(cls, genus: int, exact: bool = True) -> "FlatLineBundle":
        z = Fraction(0) if exact else 0.0
        return cls(genus, (z,) * (2 * genus))


@dataclass(frozen=True)
class FlatBundleTuple:
    bundles: tuple

    def __post_init__(self):
        bundles = tuple(self.bundles)
        if not bundles:
            raise ValueError("need at least one bundle")
        g = bundles[0].genus
        if any(b.genus != g for b in bundles):
            raise ValueError("bundles must share a genus")
        object.__setattr__(self, "bundles", bundles)

    @property
    def r(self) -> int:
        return len(self.bundles)

    @property
    def genus(self) -> int:
        return self.bundles[0].genus

    @property
    def exact(self) -> bool:
        return all(b.exact for b in self.bundles)

    def angle_matrix(self):
        """r x 2g matrix of angles."""
        return [list(b.angles) for b in self.bundles]

    def canonical(self) -> "FlatBundleTuple":
        """Factors sorted by their angle vectors (the decomposition is unique up to order)."""
        return FlatBundleTuple(tuple(sorted(self.bundles, key=lambda b: tuple(float(a) for a in b.angles))))

    @classmethod
    def from_angles(cls, angles: Sequence[Sequence], genus: int | None = None) -> "FlatBundleTuple":
        rows = [tuple(a) for a in angles]
        g = genus if genus is not None else len(rows[0]) // 2
        return cls(tuple(FlatLineBundle(g, row) for row in rows))

    def to_json(self) -> dict:
        return {
            "genus": self.genus,
            "bundles": [{"angles": [str(a) if isinstance(a, Fraction) else float(a) for a in b.angles]}
                        for b in self.bundles],
        }

    @classmethod
    def from_json(cls, data: dict, exact: bool = False) -> "FlatBundleTuple":
        g = int(data["genus"])
        rows = []
        for b in data["bundles"]:
            row = []
            for a in b["angles"]:
                row.append(Fraction(str(a)) if exact else float(Fraction(str(a))))
            rows.append(row)
        return cls.from_angles(rows, g)


def golden_tuple(r: int = 1, genus: int = 1) -> FlatBundleTuple:
    """Golden-mean angle on the first generator (and sqrt(2)-1 for a second bundle)."""
    base = [(math.sqrt(5) - 1) / 2, math.sqrt(2) - 1, math.sqrt(3) - 1, math.sqrt(7) - 2]
    rows = []
    for lam in range(r):
        row = [0.0] * (2 * genus)
        row[0] = base[lam % len(base)]
        rows.append(row)
    return FlatBundleTuple.from_angles(rows, genus)


def bundle_combine(tup: FlatBundleTuple, a: Sequence[int]) -> FlatLineBundle:
    """The bundle prod_l L_l^(a_l)."""
    if len(a) != tup.r:
        raise ValueError("multi-index length must equal the number of bundles")
    g = tup.genus
    out = []
    for i in range(2 * g):
        out.append(sum((int(ak) * b.angles[i] for ak, b in zip(a, tup.bundles)), Fraction(0) if tup.exact else 0.0))
    return FlatLineBundle(g, tuple(out))


def invariant_distance(L: FlatLineBundle, Lp: FlatLineBundle):
    """Sup over generators of the circle distance between monodromy angles."""
    if L.genus != Lp.genus:
        raise ValueError("genus mismatch")
    if L.genus == 0:
        return Fraction(0) if L.exact else 0.0
    return max(circle_distance(a - b) for a, b in zip(L.angles, Lp.angles))


@lru_cache(maxsize=None)
def l1_sphere(r: int, n: int) -> np.ndarray:
    """All a in Z^r with sum |a_l| = n, canonical order (compositions, then signs + before -)."""
    pts = []
    for comp in enumerate_multiindices(r, n):
        nz = [i for i, c in enumerate(comp) if c]
        for mask in range(1 << len(nz)):
            a = list(comp)
            for bit, i in enumerate(nz):
                if mask >> (len(nz) - 1 - bit) & 1:
                    a[i] = -a[i]
            pts.append(a)
    arr = np.array(pts, dtype=np.int64).reshape(len(pts), r)
    arr.setflags(write=False)
    return arr


def _exact_setup(tup: FlatBundleTuple):
    den = 1
    for b in tup.bundles:
        for a in b.angles:
            den = math.lcm(den, a.denominator)
    num = [[int(a * den) for a in b.angles] for b in tup.bundles]
    return den, num


def _shell_min(tup: FlatBundleTuple, n: int, setup=None):
    """(min distance, index of the first minimizer) on the l1 sphere of radius n."""
    pts = l1_sphere(tup.r, n)
    if tup.genus == 0:
        return (Fraction(0) if tup.exact else 0.0), 0
    if tup.exact:
        den, num = setup
        if den < 2**62 // max(1, n * tup.r):
            P = np.array(num, dtype=np.int64)
            v = (pts @ P) % den
            d = np.minimum(v, den - v).max(axis=1)
            i = int(np.argmin(d))
            return Fraction(int(d[i]), den), i
        P = np.array(num, dtype=object)
        v = (pts.astype(object) @ P) % den
        d = [max(min(x, den - x) for x in row) for row in v]
        i = min(range(len(d)), key=lambda k: (d[k], k))
        return Fraction(int(d[i]), den), i
    Theta = np.array([[float(a) for a in b.angles] for b in tup.bundles])
    x = (pts @ Theta) % 1.0
    d = np.minimum(x, 1.0 - x).max(axis=1)
    i = int(np.argmin(d))
    return float(d[i]), i


def shell_minima(tup: FlatBundleTuple, n_max: int, threads: int = 1):
    """Per-shell minima of d(trivial, N_a) over |a| = n, n = 1..n_max.

    Returns a list of (n, a, distance).  Shells are evaluated as a parallel map;
    the reduction is by shell index, so results do not depend on ``threads``.
    """
    setup = _exact_setup(tup) if tup.exact else None

    def work(n):
        d, i = _shell_min(tup, n, setup)
        return n, tuple(int(x) for x in l1_sphere(tup.r, n)[i]), d

    ns = list(range(1, n_max + 1))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(work, ns))
    return [work(n) for n in ns]


@dataclass
class ClassificationReport:
    verdict: str  # "E0", "S_A", or "violation"
    torsion_order: int | None = None
    fitted_A: float | None = None
    witness: tuple | None = None
    witness_distance: float | None = None
    violation: tuple | None = None
    scan_bound: int = 0
    shells: list = field(default_factory=list)

    def holds(self, A: float) -> bool:
        """Whether d(trivial, N_a) >= (2|a|)^-A on every scanned a."""
        if self.verdict != "S_A":
            return False
        return all(float(d) >= (2 * n) ** (-A) for n, _, d in self.shells)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "torsion_order": self.torsion_order,
            "fitted_A": self.fitted_A,
            "witness": list(self.witness) if self.witness else None,
            "witness_distance": self.witness_distance,
            "violation": list(self.violation) if self.violation else None,
            "scan_bound": self.scan_bound,
        }


def _torsion_order(tup: FlatBundleTuple, bound: int):
    den = 1
    for b in tup.bundles:
        for a in b.angles:
            if isinstance(a, Fraction):
                q = a.denominator
            else:
                approx = Fraction(a).limit_denominator(bound)
                if abs(float(approx) - a) > ZERO_TOL:
                    return None
                q = approx.denominator
            if q > bound:
                return None
            den = math.lcm(den, q)
    return den


def classify(tup: FlatBundleTuple, scan_bound: int, torsion_denominator_bound: int = 1000,
             threads: int = 1) -> ClassificationReport:
    """E0 / S_A classification by rational reconstruction and an l1 lattice scan."""
    if scan_bound < 1:
        raise ValueError("scan_bound must be >= 1")
    shells = shell_minima(tup, scan_bound, threads)
    order = _torsion_order(tup, torsion_denominator_bound)
    zero = next(((n, a, d) for n, a, d in shells if float(d) <= (0 if tup.exact else ZERO_TOL)), None)
    if order is not None:
        return ClassificationReport("E0", torsion_order=order, violation=zero[1] if zero else None,
                                    scan_bound=scan_bound, shells=shells)
    if zero is not None:
        return ClassificationReport("violation", violation=zero[1], witness_distance=float(zero[2]),
                                    scan_bound=scan_bound, shells=shells)
    best, wit, wd = -math.inf, None, None
    for n, a, d in shells:
        need = math.log(1.0 / float(d)) / math.log(2 * n)
        if need > best:
            best, wit, wd = need, a, float(d)
    return ClassificationReport("S_A", fitted_A=best, witness=wit, witness_distance=wd,
                                scan_bound=scan_bound, shells=shells)


@dataclass(frozen=True)
class EpsilonSequence:
    """Values inv[n-1] = 1/eps_n for n = 1..n_max; 0 encodes eps_n = infinity."""

    K: float
    inv: tuple
    witnesses: tuple = ()

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError("K must be positive")
        if any(v < 0 for v in self.inv):
            raise ValueError("inverse epsilons must be nonnegative")

    @property
    def n_max(self) -> int:
        return len(self.inv)

    def inverse(self, n: int) -> float:
        return float(self.inv[n - 1])

    def eps(self, n: int) -> float:
        v = self.inverse(n)
        return math.inf if v == 0 else 1.0 / v


def epsilon_sequence(tup: FlatBundleTuple, K: float, n_max: int, threads: int = 1) -> EpsilonSequence:
    if K <= 0 or n_max < 1:
        raise ValueError("need K > 0 and n_max >= 1")
    shells = shell_minima(tup, n_max, threads)
    inv = tuple(float(d) / K for _, _, d in shells)
    return EpsilonSequence(float(K), inv, tuple(a for _, a, _ in shells))


@dataclass
class SiegelReport:
    property_a: float | None
    property_b: bool
    violations: list

    def to_json(self) -> dict:
        return {"property_a": self.property_a, "property_b": self.property_b,
                "violations": [list(v) for v in self.violations]}


def subadditivity_pairs(eps: EpsilonSequence, m_max: int, tol: float = 1e-12):
    """(n, m, inv_{n-m}, inv_n + inv_m, ok) for all m < n <= m_max."""
    out = []
    for n in range(2, m_max + 1):
        for m in range(1, n):
            lhs = eps.inverse(n - m)
            rhs = eps.inverse(n) + eps.inverse(m)
            out.append((n, m, lhs, rhs, lhs <= rhs + tol))
    return out


def siegel_check(eps: EpsilonSequence, m_max: int, A_step: float = 0.1, A_max: float = 100.0,
                 tol: float = 1e-12) -> SiegelReport:
    """(a): least grid A with eps_n < (2n)^A for n <= m_max; (b): subadditivity of 1/eps."""
    if eps.n_max < m_max:
        raise ValueError("sequence shorter than m_max")
    A = None
    if all(eps.inverse(n) > 0 for n in range(1, m_max + 1)):
        need = max(math.log(eps.eps(n)) / math.log(2 * n) for n in range(1, m_max + 1))
        k = max(1, math.floor(need / A_step))
        while k * A_step <= A_max:
            cand = round(k * A_step, 10)
            if all(eps.eps(n) < (2 * n) ** cand for n in range(1, m_max + 1)):
                A = cand
                break
            k += 1
    viol = [(n, m, lhs, rhs) for n, m, lhs, rhs, ok in subadditivity_pairs(eps, m_max, tol) if not ok]
    return SiegelReport(A, not viol, viol)


def _joint_spectrum(family, seed=0):
    mats = [np.asarray(T, dtype=complex) for T in family]
    rng = np.random.default_rng(seed)
    C = sum(c * T for c, T in zip(rng.normal(size=len(mats)) + 0.37, mats))
    from scipy.linalg import schur

    _, Q = schur(C, output="complex")
    return np.array([np.diag(Q.conj().T @ T @ Q) for T in mats]).T


def _check_commuting(family, tol):
    for i, A in enumerate(family):
        for B in family[i + 1:]:
            err = np.abs(A @ B - B @ A).max()
            if err > tol:
                raise ValueError(f"family does not commute (||AB - BA|| = {err:.3e})")


def monodromy_equivalent(T_family, S_family, tol: float = 1e-10) -> bool:
    """Simultaneous unitary conjugacy of two commuting unitary families via joint spectra."""
    T_family = [np.asarray(T, dtype=complex) for T in T_family]
    S_family = [np.asarray(S, dtype=complex) for S in S_family]
    if len(T_family) != len(S_family):
        raise ValueError("families must have the same length")
    if any(T.shape != S.shape for T, S in zip(T_family, S_family)):
        return False
    _check_commuting(T_family, tol)
    _check_commuting(S_family, tol)
    a = _joint_spectrum(T_family)
    b = _joint_spectrum(S_family)
    cost = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() <= tol)
