"""Example germ systems and seeded random builders.

Named examples (see :func:`generate_example`):

* ``deformation_trivial``: f = 0 over diagonal angles.
* ``projective_bundle``: one generator acting by w -> S w / (1 + a.w).
* ``resonant_demo``: t = (i, -1) with a w_1^2 term in the second component.
* ``random_diophantine``: seeded quadratic-cubic f over golden-type angles.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .normalizer import GermSystem, Generator, angles_to_diagonal, conjugate_system
from .series import TruncatedSeries, get_basis

__all__ = [
    "GOLDEN",
    "DIOPHANTINE_ANGLES",
    "EXAMPLES",
    "generate_example",
    "deformation_trivial",
    "projective_bundle",
    "resonant_demo",
    "random_diophantine",
    "random_coefficients",
    "random_system",
    "random_change",
    "linear_system",
    "conjugated_linear",
]

GOLDEN = (math.sqrt(5) - 1) / 2
DIOPHANTINE_ANGLES = (GOLDEN, math.sqrt(2) - 1, math.sqrt(3) - 1, math.sqrt(7) - 2)


def _angles(angles, r: int, exact: bool):
    if angles is None:
        if exact:
            raise ValueError("exact mode needs rational angles")
        if r > len(DIOPHANTINE_ANGLES):
            raise ValueError(f"default angles cover r <= {len(DIOPHANTINE_ANGLES)}")
        angles = DIOPHANTINE_ANGLES[:r]
    if len(angles) != r:
        raise ValueError(f"need {r} angles, got {len(angles)}")
    return [Fraction(str(a)) if exact else float(Fraction(str(a)) if isinstance(a, str) else a) for a in angles]


def _zero_f(r: int, N: int, exact: bool) -> TruncatedSeries:
    return TruncatedSeries.zeros(r, N, r, exact=exact)


def linear_system(angles, N: int, mode: str = "float") -> GermSystem:
    """One generator with diagonal T and f = 0."""
    exact = mode == "exact"
    angles = _angles(angles, len(angles), exact)
    r = len(angles)
    return GermSystem(r, N, [Generator(angles_to_diagonal(angles, exact), _zero_f(r, N, exact))], mode=mode)


def deformation_trivial(r: int = 2, N: int = 8, angles=None, mode: str = "float") -> GermSystem:
    exact = mode == "exact"
    return linear_system(_angles(angles, r, exact), N, mode)


def projective_bundle(r: int = 2, N: int = 6, a=None, S_angles=None, mode: str = "exact") -> GermSystem:
    """Single generator with w(gamma p) = S w / (1 + a.w), so T = S^-1 and w + f = w / (1 + a.w)."""
    exact = mode == "exact"
    a = [1] * r if a is None else list(a)
    if len(a) != r:
        raise ValueError(f"extension data needs {r} entries")
    S_angles = [0] * r if S_angles is None else S_angles
    S_angles = _angles(S_angles, r, exact)
    T = angles_to_diagonal([-x for x in S_angles], exact)
    ident = TruncatedSeries.identity(r, N, exact=exact)
    comps = ident.components()
    aw = TruncatedSeries.zeros(r, N, 1, exact=exact)
    for lam in range(r):
        coef = Fraction(str(a[lam])) if exact else complex(a[lam])
        aw = aw + comps[lam] * coef
    inv = (aw + 1).reciprocal()
    w_new = TruncatedSeries.stack([c * inv for c in comps])
    f = w_new - ident
    return GermSystem(r, N, [Generator(T, f, label="projective")], mode=mode)


def resonant_demo(N: int = 5, mode: str = "exact") -> GermSystem:
    """t = (i, -1): the monomial w_1^2 in the second component is resonant since i^2 = -1."""
    exact = mode == "exact"
    b = get_basis(2, N)
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    f = TruncatedSeries.from_terms(b, [((2, 0), [zero, one])], 2, exact=exact)
    T = angles_to_diagonal(_angles(["1/4", "1/2"], 2, exact), exact)
    return GermSystem(2, N, [Generator(T, f, label="resonant")], mode=mode)


def random_coefficients(basis, rng: np.random.Generator, m: int, degrees: Sequence[int], scale: float = 0.1,
                        exact: bool = False, complex_coeffs: bool = True) -> TruncatedSeries:
    """Random terms on the given w-degrees (parameter modes included).

    Float coefficients are uniform in the disc of radius ``scale``; exact ones
    are small rationals k/4 with |k| <= 4.
    """
    terms = []
    for e in basis.exps:
        if int(sum(e[: basis.r])) not in degrees:
            continue
        if exact:
            vals = [Fraction(int(k), 4) for k in rng.integers(-4, 5, size=m)]
        else:
            rad = scale * np.sqrt(rng.random(m))
            ph = rng.random(m) if complex_coeffs else np.zeros(m)
            vals = list(rad * np.exp(2j * np.pi * ph))
        terms.append((tuple(int(x) for x in e), vals))
    return TruncatedSeries.from_terms(basis, terms, m, exact=exact)


def random_system(angles, N: int, seed: int, degrees: Sequence[int] | None = None, scale: float = 0.1,
                  mode: str = "float") -> GermSystem:
    """One generator with diagonal T and seeded random f on the given degrees (default 2..N)."""
    exact = mode == "exact"
    angles = _angles(angles, len(angles), exact)
    r = len(angles)
    rng = np.random.default_rng(seed)
    degrees = range(2, N + 1) if degrees is None else degrees
    f = random_coefficients(get_basis(r, N), rng, r, degrees, scale, exact)
    return GermSystem(r, N, [Generator(angles_to_diagonal(angles, exact), f)], mode=mode)


def random_diophantine(r: int = 2, N: int = 10, seed: int = 0, scale: float = 0.1, max_degree: int = 3,
                       angles=None) -> GermSystem:
    return random_system(_angles(angles, r, False), N, seed, range(2, min(max_degree, N) + 1), scale)


def random_change(r: int, N: int, seed: int, scale: float = 0.1, exact: bool = False,
                  hypersurface: bool = False) -> TruncatedSeries:
    """w = v + (random terms of degree 2..N); with ``hypersurface`` the first component is divisible by v_1."""
    rng = np.random.default_rng(seed)
    b = get_basis(r, N)
    h = random_coefficients(b, rng, r, range(2, N + 1), scale, exact)
    if hypersurface:
        mask = b.exps[:, 0] == 0
        h.coeffs[mask, 0] = 0
    return TruncatedSeries.identity(r, N, exact=exact) + h


def conjugated_linear(angles, N: int, seed: int, mode: str = "float", scale: float = 0.1,
                      hypersurface: bool = False) -> GermSystem:
    """A linear system rewritten in random coordinates, hence of infinite type by construction."""
    lin = linear_system(angles, N, mode)
    chi = random_change(lin.r, N, seed, scale, mode == "exact", hypersurface)
    return conjugate_system(lin, chi)


EXAMPLES = {
    "deformation_trivial": deformation_trivial,
    "projective_bundle": projective_bundle,
    "resonant_demo": resonant_demo,
    "random_diophantine": random_diophantine,
}


def generate_example(name: str, **params) -> GermSystem:
    try:
        builder = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(sorted(EXAMPLES))}") from None
    return builder(**params)
