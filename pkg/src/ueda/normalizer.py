"""Germ systems along a compact leaf and their degree-by-degree normalization.

A system has one or more generators gamma.  Each generator carries a linear
part T, a translation c of the base (a point x of the real torus R^p/Z^p,
p in {0, 2}), optional w-dependent base terms g, and coefficient data f, and
encodes the relation

    T . w(gamma p) = w(p) + f(x(p), w(p)),     x(gamma p) = x(p) + c + g(x(p), w(p)).

Coefficient functions of x are Fourier polynomials in q = exp(2 pi i x) (see
:mod:`ueda.series`).  With p = 0 there is a single chart and coefficients are
constants.

Normalization looks for new coordinates u with T . u(gamma p) = u(p).  They are
written as w = u + sum F_alpha(x) u^alpha; at degree n the coefficients F_n
solve the twisted equation

    F_n(x) - T F_n(x + c) tau(T^-1) = -(degree-n part of the residual)

for every generator, where the residual is T . U(x', Phi(w)) - U(w) for the
current inverse change U (see :func:`expand_relation`).  If the equation has no
solution the system is of type n - 1 and the unsolvable part is the obstruction
class representative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cohomology import (
    OBSTRUCTION_TOL,
    ObstructionNonzero,
    TwistedCochainProblem,
    estimate_K,
    mode_coboundary_solve,
    mode_matrix,
    mode_phase,
    solve_min_norm,
)
from .cyclotomic import root_of_unity
from .series import (
    TruncatedSeries,
    scalar_to_json,
    check_unitary,
    conj_transpose,
    enumerate_multiindices,
    get_basis,
    parse_scalar,
    symmetric_transition,
    to_complex_array,
)

__all__ = [
    "Generator",
    "GermSystem",
    "NormalizationState",
    "ObstructionReport",
    "NormalizationResult",
    "BoundReport",
    "NonSplitExtension",
    "ConstrainedUnsolvable",
    "InternalConsistencyError",
    "NotOfType",
    "expand_relation",
    "obstruction_class",
    "solve_degree",
    "normalize",
    "split_linear_part",
    "finite_cover_average",
    "power_system",
    "conjugate_system",
    "linear_change",
    "verify_majorant_bounds",
    "system_K",
    "CONJUGACY_TOL",
]

CONJUGACY_TOL = 1e-9


class NonSplitExtension(ArithmeticError):
    """The block-triangular linear part cannot be conjugated to block-diagonal form."""


class ConstrainedUnsolvable(ArithmeticError):
    """The hypersurface-constrained equation fails although the free one is solvable."""


class InternalConsistencyError(AssertionError):
    """A computed linearization does not satisfy its defining relation."""


class NotOfType(ValueError):
    """The system has nonzero coefficients below the requested level."""


def angles_to_diagonal(angles, exact: bool) -> np.ndarray:
    r = len(angles)
    if exact:
        T = np.empty((r, r), dtype=object)
        T.fill(0)
        for i, a in enumerate(angles):
            a = Fraction(a)
            T[i, i] = root_of_unity(a.numerator, a.denominator)
        return T
    return np.diag(np.exp(2j * np.pi * np.array([float(a) for a in angles])))


def _identity(r: int, exact: bool) -> np.ndarray:
    if exact:
        I = np.empty((r, r), dtype=object)
        I.fill(0)
        for i in range(r):
            I[i, i] = 1
        return I
    return np.eye(r, dtype=complex)


def _is_zero_matrix(A, tol=1e-12) -> bool:
    A = np.asarray(A)
    if A.dtype == object:
        return all(x == 0 for x in A.reshape(-1))
    return bool(np.abs(A).max() <= tol) if A.size else True


def _inverse(T: np.ndarray) -> np.ndarray:
    if T.dtype == object:
        from .cohomology import _rref_solve

        r = T.shape[0]
        I = _identity(r, True)
        cols = [_rref_solve(T, I[:, j])[0] for j in range(r)]
        return np.array(cols, dtype=object).T
    return np.linalg.inv(T)


@dataclass
class Generator:
    T: np.ndarray
    f: TruncatedSeries
    c: tuple = ()
    g: TruncatedSeries | None = None
    label: str = ""

    @property
    def exact(self) -> bool:
        return np.asarray(self.T).dtype == object

    def is_unitary(self) -> bool:
        try:
            check_unitary(self.T)
            return True
        except ValueError:
            return False

    def T_inverse(self) -> np.ndarray:
        if self.is_unitary():
            return conj_transpose(np.asarray(self.T))
        return _inverse(np.asarray(self.T))

    def phases(self) -> list:
        """exp(2 pi i c_i) for each parameter variable."""
        exact = self.exact
        out = []
        for i, ci in enumerate(self.c):
            e = [0] * len(self.c)
            e[i] = 1
            out.append(mode_phase(e, [Fraction(x) if exact else x for x in self.c], exact))
        return out


@dataclass
class GermSystem:
    """Generators of the deck group acting on a neighbourhood of the leaf."""

    r: int
    N: int
    generators: list
    p: int = 0
    M: int = 0
    mode: str = "float"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("truncation degree must be >= 2")
        if self.mode not in ("float", "exact"):
            raise ValueError("mode must be 'float' or 'exact'")
        if not self.generators:
            raise ValueError("need at least one generator")
        b = self.basis
        for k, gen in enumerate(self.generators):
            T = np.asarray(gen.T)
            if T.shape != (self.r, self.r):
                raise ValueError(f"generator {k}: T must be {self.r}x{self.r}")
            if gen.f.basis is not b or gen.f.m != self.r:
                raise ValueError(f"generator {k}: coefficient series has the wrong shape")
            if len(gen.c) != self.p:
                raise ValueError(f"generator {k}: translation needs {self.p} entries")
            low = gen.f.order()
            if low is not None and low <= 1:
                raise ValueError(f"generator {k}: coefficient data must start at degree 2 (found degree {low})")
            if gen.g is not None:
                if self.mode == "exact":
                    raise ValueError("w-dependent base terms are only supported in float mode")
                if gen.g.basis is not b or gen.g.m != self.p:
                    raise ValueError(f"generator {k}: base terms have the wrong shape")
                gl = gen.g.order()
                if gl is not None and gl < 1:
                    raise ValueError(f"generator {k}: base terms must vanish on the leaf")
            if (self.mode == "exact") != gen.exact:
                raise ValueError(f"generator {k}: matrix type does not match mode {self.mode!r}")
            if not gen.is_unitary():
                T = to_complex_array(T)
                S = T[1:, 1:]
                ok = np.abs(T[0, 1:]).max(initial=0) <= 1e-12 and abs(abs(T[0, 0]) - 1) <= 1e-12
                try:
                    check_unitary(S)
                except ValueError:
                    ok = False
                if not ok:
                    raise ValueError(f"generator {k}: linear part is neither unitary nor block lower-triangular "
                                     "with unitary diagonal blocks")

    @property
    def basis(self):
        return get_basis(self.r, self.N, self.p, self.M)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def is_unitary(self) -> bool:
        return all(g.is_unitary() for g in self.generators)

    def is_diagonal(self) -> bool:
        return all(_is_zero_matrix(np.asarray(g.T) - np.diag(np.diag(np.asarray(g.T)))) for g in self.generators)

    def identity(self) -> TruncatedSeries:
        return TruncatedSeries.identity(self.r, self.N, self.p, self.M, exact=self.exact)

    # -- JSON -------------------------------------------------------------------
    @classmethod
    def from_json(cls, data: dict, mode: str | None = None) -> "GermSystem":
        mode = mode or data.get("mode", "float")
        exact = mode == "exact"
        r, N = int(data["r"]), int(data["N"])
        gens_in = data["generators"]
        elliptic = "mode_degree" in data or any(g.get("c") for g in gens_in)
        p = 2 if elliptic else 0
        M = int(data.get("mode_degree", 0))
        if elliptic and "mode_degree" not in data:
            M = max([sum(t.get("mode", [0, 0])) for g in gens_in for t in g.get("terms", []) + g.get("base_terms", [])],
                    default=0)
        b = get_basis(r, N, p, M)
        gens = []
        for k, g in enumerate(gens_in):
            Tin = g["T"]
            if isinstance(Tin, dict):
                angles = [Fraction(str(a)) if exact else float(Fraction(str(a))) for a in Tin["angles"]]
                T = angles_to_diagonal(angles, exact)
            else:
                T = np.array([[parse_scalar(z, exact) for z in row] for row in Tin],
                             dtype=object if exact else complex)
            c = tuple(Fraction(str(x)) if exact else float(x) for x in g.get("c", [0] * p)) if p else ()
            terms = []
            for t in g.get("terms", []):
                e = tuple(t["alpha"]) + (tuple(t.get("mode", [0] * p)) if p else ())
                terms.append((e, [parse_scalar(z, exact) for z in t["coeff"]]))
            f = TruncatedSeries.from_terms(b, terms, r, exact=exact)
            gser = None
            if g.get("base_terms"):
                bterms = []
                for t in g["base_terms"]:
                    e = tuple(t["alpha"]) + (tuple(t.get("mode", [0] * p)) if p else ())
                    bterms.append((e, [parse_scalar(z, exact) for z in t["coeff"]]))
                if not p:
                    raise ValueError("base terms need a base translation model (give 'c')")
                gser = TruncatedSeries.from_terms(b, bterms, p, exact=exact)
            gens.append(Generator(T, f, c, gser, g.get("label", f"g{k}")))
        return cls(r, N, gens, p, M, mode)

    def to_json(self) -> dict:
        gens = []
        for g in self.generators:
            item = {"T": [[scalar_to_json(z) for z in row] for row in np.asarray(g.T)]}
            if self.p:
                item["c"] = [str(x) if isinstance(x, Fraction) else float(x) for x in g.c]
            ser = g.f.to_json()
            item["terms"] = ser["terms"]
            if g.g is not None:
                item["base_terms"] = g.g.to_json()["terms"]
            gens.append(item)
        out = {"r": self.r, "N": self.N, "mode": self.mode, "generators": gens}
        if self.p:
            out["mode_degree"] = self.M
        return out


# ---------------------------------------------------------------------------
# relation expansion


def _phi(system: GermSystem, gen: Generator) -> TruncatedSeries:
    """Phi(w) = T^-1 (w + f(w)), the action of the generator on the fibre coordinate."""
    return (system.identity() + gen.f).apply_matrix(gen.T_inverse())


def _base_images(system: GermSystem, gen: Generator, w: TruncatedSeries, q: list) -> list:
    """Images of the parameter variables q_i under x -> x + c + g(x, w), given w(.) and q(.)."""
    out = []
    phases = gen.phases()
    for i in range(system.p):
        img = q[i] * phases[i]
        if gen.g is not None:
            gi = gen.g.component(i) * (2j * math.pi)
            E = gi.exp()
            E = E.compose(w.components() + q)
            img = img * E
        out.append(img)
    return out


def _step(system: GermSystem, gen: Generator, w: TruncatedSeries, q: list, phi: TruncatedSeries | None = None):
    """One application of the generator to coordinate functions (w(.), q(.))."""
    phi = _phi(system, gen) if phi is None else phi
    w_new = phi.compose(w.components() + q)
    q_new = _base_images(system, gen, w, q)
    return w_new, q_new


def _params(system: GermSystem) -> list:
    b = system.basis
    return [TruncatedSeries.variable(b, b.r + i, exact=system.exact) for i in range(system.p)]


def expand_relation(system: GermSystem, change: TruncatedSeries) -> list[TruncatedSeries]:
    """T . U(x', Phi(w)) - U(w) for every generator, U = change (u as a function of w).

    The result vanishes identically iff u = U(w) linearizes every generator.
    """
    if change.basis is not system.basis or change.m != system.r:
        if change.N > system.N:
            raise ValueError(f"change has degree {change.N} > truncation {system.N}")
        raise ValueError("change does not live on the system's basis")
    ident = system.identity()
    diff = change.shell(1) - ident.shell(1)
    if any(x != 0 for x in diff.reshape(-1)) if change.exact else np.abs(diff).max(initial=0) > 1e-12:
        raise ValueError("change must have identity linear part")
    out = []
    q = _params(system)
    for gen in system.generators:
        w_new, q_new = _step(system, gen, ident, q)
        moved = change.compose(w_new.components() + q_new)
        out.append(moved.apply_matrix(gen.T) - change)
    return out


# ---------------------------------------------------------------------------
# degree-n linear problem


def _mode_list(system: GermSystem) -> list:
    if not system.p:
        return [()]
    from .series import _indices_upto

    return _indices_upto(system.p, system.M)


def _shell_to_modes(system: GermSystem, block: np.ndarray, n: int) -> dict:
    """Shell block (rows (alpha, mode), cols lambda) -> {mode: vec of the r x s matrix}."""
    modes = _mode_list(system)
    s = len(enumerate_multiindices(system.r, n))
    nq = len(modes)
    arr = block.reshape(s, nq, system.r)
    return {m: arr[:, k, :].T.reshape(-1) for k, m in enumerate(modes)}


def _modes_to_shell(system: GermSystem, vals: dict, n: int) -> np.ndarray:
    modes = _mode_list(system)
    s = len(enumerate_multiindices(system.r, n))
    nq = len(modes)
    exact = system.exact
    out = np.empty((s, nq, system.r), dtype=object if exact else complex)
    if exact:
        out.fill(0)
    else:
        out[:] = 0
    for k, m in enumerate(modes):
        if m in vals:
            out[:, k, :] = np.asarray(vals[m]).reshape(system.r, s).T
    return out.reshape(s * nq, system.r)


def degree_problem(system: GermSystem, n: int, rhs_blocks: Sequence[np.ndarray]) -> TwistedCochainProblem:
    """Group-model problem for degree n: weights kron(T, tau(T^-1)^T) per generator."""
    weights = []
    for gen in system.generators:
        T = np.asarray(gen.T)
        tau = symmetric_transition(gen.T_inverse(), n, check=False).tau
        W = np.kron(T.astype(object), tau.T.astype(object)) if system.exact else np.kron(T, tau.T)
        weights.append(W)
    rhs = [_shell_to_modes(system, -np.asarray(b), n) for b in rhs_blocks]
    trans = [tuple(g.c) if system.p else (0, 0) for g in system.generators]
    d = system.r * len(enumerate_multiindices(system.r, n))
    return TwistedCochainProblem("group", d, weights, rhs, translations=trans, name=f"degree {n}")


@dataclass
class ObstructionReport:
    level: int
    cocycle: list  # per generator: degree-(level+1) coefficient block
    representative: dict  # mode -> unsolvable residual (stacked over generators)
    nonzero: bool
    norm: float
    components: list  # (generator, lambda, alpha, mode, value) of the representative
    cocycle_violation: float = 0.0

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "nonzero": self.nonzero,
            "norm": self.norm,
            "cocycle_violation": self.cocycle_violation,
            "components": [
                {"generator": g, "lambda": lam, "alpha": list(a), "mode": list(m),
                 "value": [float(complex(v).real), float(complex(v).imag)]}
                for g, lam, a, m, v in self.components
            ],
        }


def _report_from_solution(system: GermSystem, n: int, blocks, sol) -> ObstructionReport:
    s = len(enumerate_multiindices(system.r, n))
    alphas = enumerate_multiindices(system.r, n)
    d = system.r * s
    comps = []
    for m, res in sorted(sol.residual.items()):
        res = np.asarray(res)
        for gi in range(len(system.generators)):
            part = res[gi * d:(gi + 1) * d]
            for idx, v in enumerate(part):
                nz = (v != 0) if system.exact else abs(v) > OBSTRUCTION_TOL
                if nz:
                    comps.append((gi, idx // s, alphas[idx % s], m, v))
    return ObstructionReport(n - 1, [np.asarray(b) for b in blocks], sol.residual, sol.status != "solved",
                             sol.residual_norm, comps)


@dataclass
class NormalizationState:
    Psi: TruncatedSeries  # w = Psi(u) = u + sum F_alpha u^alpha
    U: TruncatedSeries  # u = U(w), the inverse of Psi
    degree: int = 1
    divisor_log: dict = field(default_factory=dict)
    solver_norms: dict = field(default_factory=dict)

    @classmethod
    def start(cls, system: GermSystem) -> "NormalizationState":
        ident = system.identity()
        return cls(ident, ident)

    def F_shell(self, n: int) -> np.ndarray:
        return self.Psi.shell(n)


def _pinv_inf_norm(A: np.ndarray) -> float:
    A = to_complex_array(A)
    P = np.linalg.pinv(A, rcond=1e-12 / max(1.0, np.abs(A).max(initial=0)))
    return float(np.abs(P).sum(axis=1).max()) if P.size else 0.0


def _check_lower(system: GermSystem, R: TruncatedSeries, n: int, scale: float):
    for k in range(0, n):
        blk = R.shell(k)
        if system.exact:
            bad = any(x != 0 for x in blk.reshape(-1))
        else:
            bad = blk.size and np.abs(blk).max() > OBSTRUCTION_TOL * max(1.0, scale)
        if bad:
            return k
    return None


def solve_degree(system: GermSystem, n: int, state: NormalizationState, hypersurface: bool = False,
                 residuals: list | None = None) -> NormalizationState:
    """Compute F_n, extending a state that is valid through degree n - 1.

    Raises :class:`ObstructionNonzero` (with ``.report`` and ``.level = n - 1``)
    when the degree-n equation has no solution.
    """
    if state.degree != n - 1:
        raise ValueError(f"state is at degree {state.degree}, cannot solve degree {n}")
    R = expand_relation(system, state.U) if residuals is None else residuals
    scale = max(1.0, max(x.max_abs() for x in R))
    for gi, Rg in enumerate(R):
        k = _check_lower(system, Rg, n, scale)
        if k is not None:
            raise InternalConsistencyError(f"generator {gi}: residual has degree-{k} terms before degree {n}")
    blocks = [Rg.shell(n) for Rg in R]
    problem = degree_problem(system, n, blocks)
    sol = mode_coboundary_solve(problem, raise_on_obstruction=False)
    if sol.status != "solved":
        rep = _report_from_solution(system, n, blocks, sol)
        err = ObstructionNonzero(f"degree-{n} equation is not solvable: type {n - 1} "
                                 f"(class norm {sol.residual_norm:.3e})", norm=sol.residual_norm)
        err.level = n - 1
        err.report = rep
        raise err
    vals = sol.values
    if hypersurface:
        vals = _constrained_values(system, n, problem)
    block = _modes_to_shell(system, vals, n)
    Psi = state.Psi.with_shell(n, block)
    U = Psi.reverse()
    norms = [_pinv_inf_norm(mode_matrix(problem, m)) for m in problem.modes()]
    log = dict(state.divisor_log)
    log[n] = sol.smallest_divisor
    sn = dict(state.solver_norms)
    sn[n] = max(norms) if norms else 0.0
    return NormalizationState(Psi, U, n, log, sn)


def _constrained_values(system: GermSystem, n: int, problem: TwistedCochainProblem) -> dict:
    """Re-solve with F^1_alpha = 0 for alpha_1 = 0 removed from the unknowns."""
    alphas = enumerate_multiindices(system.r, n)
    s = len(alphas)
    keep = [idx for idx in range(system.r * s) if not (idx // s == 0 and alphas[idx % s][0] == 0)]
    d = problem.dim
    exact = system.exact
    zero = np.zeros(d, dtype=object if exact else complex)
    if exact:
        zero.fill(0)
    out = {}
    for m in problem.modes():
        A = mode_matrix(problem, m)
        b = np.concatenate([h.get(m, zero) for h in problem.rhs])
        ls = solve_min_norm(A[:, keep], b)
        if ls.status != "solved":
            raise ConstrainedUnsolvable(f"degree {n}, mode {m}: hypersurface-constrained equation has no solution "
                                        f"(residual {ls.residual_norm:.3e}); input violates the invariance hypothesis")
        x = zero.copy()
        x[keep] = ls.x
        out[m] = x
    return out


def _check_hypersurface_input(system: GermSystem):
    for k, gen in enumerate(system.generators):
        T = np.asarray(gen.T)
        if not (_is_zero_matrix(T[0, 1:]) and _is_zero_matrix(T[1:, 0])):
            raise ValueError(f"generator {k}: hypersurface mode needs T block-diagonal (1 | r-1)")
        b = system.basis
        mask = b.exps[:, 0] == 0
        col = gen.f.coeffs[mask, 0]
        if not _is_zero_matrix(col):
            raise ValueError(f"generator {k}: f^1 has terms with alpha_1 = 0; the leaf's hypersurface is not invariant")


def obstruction_class(system: GermSystem, n: int) -> ObstructionReport:
    """The n-th obstruction class of a system that is of type n as given."""
    ident = system.identity()
    R = expand_relation(system, ident)
    for gi, Rg in enumerate(R):
        k = _check_lower(system, Rg, n + 1, max(1.0, Rg.max_abs()))
        if k is not None:
            e = next((a for a, v in Rg.terms() if sum(a[: system.r]) == k), None)
            raise NotOfType(f"generator {gi} has a nonzero degree-{k} term at {e}; system is not of type {n}")
    if n + 1 > system.N:
        raise ValueError("level exceeds the truncation")
    blocks = [Rg.shell(n + 1) for Rg in R]
    problem = degree_problem(system, n + 1, blocks)
    from .cohomology import group_cocycle_check

    cc = group_cocycle_check(problem)
    sol = mode_coboundary_solve(problem, raise_on_obstruction=False)
    rep = _report_from_solution(system, n + 1, blocks, sol)
    rep.cocycle_violation = cc.max_violation
    return rep


# ---------------------------------------------------------------------------
# full normalization


@dataclass
class BoundReport:
    holds: bool
    margins: dict  # degree -> min over alpha of A_alpha - ||F_alpha||
    violations: list  # (alpha, ||F_alpha||, A_alpha)
    K_used: float
    K_system: float

    def to_json(self) -> dict:
        return {"holds": self.holds, "K_used": self.K_used, "K_system": self.K_system,
                "margins": {str(k): v for k, v in sorted(self.margins.items())},
                "violations": [{"alpha": list(a), "norm": x, "bound": y} for a, x, y in self.violations]}


@dataclass
class NormalizationResult:
    type: int | None  # None means no obstruction through degree N
    N: int
    state: NormalizationState
    residual: float | None
    obstruction: ObstructionReport | None = None
    hypersurface_ok: bool | None = None
    bound_report: BoundReport | None = None
    commutator_residual: float | None = None

    @property
    def infinite(self) -> bool:
        return self.type is None

    @property
    def type_label(self) -> str:
        return f"inf(N={self.N})" if self.type is None else str(self.type)

    @property
    def F(self) -> TruncatedSeries:
        return self.state.Psi

    @property
    def u(self) -> TruncatedSeries:
        return self.state.U

    def to_json(self) -> dict:
        out = {
            "type": self.type_label,
            "infinite_type": self.infinite,
            "N": self.N,
            "degree_reached": self.state.degree,
            "divisor_minima": {str(k): v for k, v in sorted(self.state.divisor_log.items())},
            "residual": self.residual,
            "commutator_residual": self.commutator_residual,
        }
        if self.obstruction is not None:
            out["obstruction"] = self.obstruction.to_json()
        if self.hypersurface_ok is not None:
            out["hypersurface_ok"] = self.hypersurface_ok
        if self.bound_report is not None:
            out["bound_margins"] = self.bound_report.to_json()
        if self.infinite:
            out["F"] = self.state.Psi.to_json()
            out["u"] = self.state.U.to_json()
        return out


def conjugacy_residual(system: GermSystem, U: TruncatedSeries) -> float:
    return max(R.max_abs() for R in expand_relation(system, U))


def commutator_residual(system: GermSystem) -> float | None:
    """How far the first two generators are from commuting (logged, not enforced)."""
    if len(system.generators) < 2:
        return None
    a, b = system.generators[:2]
    ident = system.identity()
    q = _params(system)
    wa, qa = _step(system, a, ident, q)
    wab, qab = _step(system, b, wa, qa)
    wb, qb = _step(system, b, ident, q)
    wba, qba = _step(system, a, wb, qb)
    # compare in the same order of application: b after a versus a after b
    res = (wab - wba).max_abs()
    for x, y in zip(qab, qba):
        res = max(res, (x - y).max_abs())
    return res


def normalize(system: GermSystem, hypersurface: bool = False, track_majorant=None,
              tol: float = CONJUGACY_TOL) -> NormalizationResult:
    """Run solve_degree for n = 2..N; report the type or a verified linearization."""
    if not system.is_unitary():
        raise ValueError("linear part is not unitary; apply split_linear_part first")
    if hypersurface:
        _check_hypersurface_input(system)
    state = NormalizationState.start(system)
    for n in range(2, system.N + 1):
        try:
            state = solve_degree(system, n, state, hypersurface=hypersurface)
        except ObstructionNonzero as err:
            return NormalizationResult(err.level, system.N, state, None, err.report,
                                       commutator_residual=commutator_residual(system))
    R = expand_relation(system, state.U)
    if system.exact:
        bad = [R_.order() for R_ in R if not R_.is_zero()]
        if bad:
            raise InternalConsistencyError(f"exact linearization leaves a residual at degree {min(bad)}")
        residual = 0.0
    else:
        residual = max(R_.max_abs() for R_ in R)
        if residual > tol * max(1.0, state.U.max_abs()):
            raise InternalConsistencyError(f"conjugacy residual {residual:.3e} above tolerance")
    hyp = None
    if hypersurface:
        b = system.basis
        mask = b.exps[:, 0] == 0
        u1 = state.U.coeffs[mask, 0]
        hyp = all(x == 0 for x in u1) if system.exact else bool(np.all(u1 == 0))
        if not hyp:
            raise InternalConsistencyError("u^1 has monomials without w_1")
    result = NormalizationResult(None, system.N, state, residual, hypersurface_ok=hyp,
                                 commutator_residual=commutator_residual(system))
    if track_majorant is not None:
        result.bound_report = verify_majorant_bounds(system, state, track_majorant)
    return result


# ---------------------------------------------------------------------------
# coordinate changes and derived systems


def _rebuild(system: GermSystem, gens: list, mode: str | None = None) -> GermSystem:
    return GermSystem(system.r, system.N, gens, system.p, system.M, mode or system.mode)


def _drop_low(f: TruncatedSeries, tol: float = 1e-12) -> TruncatedSeries:
    """Zero the w-degree <= 1 part of a float series whose low part is roundoff only."""
    if f.exact:
        return f
    low = f.basis.wdeg <= 1
    if np.abs(f.coeffs[low]).max(initial=0) > tol:
        raise InternalConsistencyError("coordinate change produced linear terms")
    out = f.copy()
    out.coeffs[low] = 0
    return out


def conjugate_system(system: GermSystem, chi: TruncatedSeries) -> GermSystem:
    """The same system written in coordinates v with w = chi(v), chi = id + O(|v|^2)."""
    inv = chi.reverse()
    R = expand_relation(system, inv)
    chi_parts = chi.components() + _params(system)
    gens = []
    for gen, Rg in zip(system.generators, R):
        f_new = _drop_low(Rg.compose(chi_parts))
        g_new = gen.g.compose(chi_parts) if gen.g is not None else None
        gens.append(Generator(gen.T, f_new, gen.c, g_new, gen.label))
    return _rebuild(system, gens)


def linear_change(system: GermSystem, M) -> GermSystem:
    """The system in coordinates v with w = M v for a constant invertible matrix M."""
    M = np.asarray(M, dtype=object if system.exact else complex)
    Minv = _inverse(M)
    lin = system.identity().apply_matrix(M)
    parts = lin.components() + _params(system)
    gens = []
    for gen in system.generators:
        T_new = Minv @ np.asarray(gen.T) @ M
        f_new = _drop_low(gen.f.compose(parts).apply_matrix(Minv))
        g_new = gen.g.compose(parts) if gen.g is not None else None
        gens.append(Generator(T_new, f_new, gen.c, g_new, gen.label))
    return _rebuild(system, gens)


def split_linear_part(system: GermSystem):
    """Conjugate block lower-triangular linear parts [[t, 0], [a, S]] to block-diagonal form.

    Returns (new system, M) with M^-1 T M block-diagonal for every generator and
    new coordinates w_new = M^-1 w.  Raises :class:`NonSplitExtension` when the
    splitting equation (t - S) m = a has no common solution.
    """
    if system.is_unitary() and all(_is_zero_matrix(np.asarray(g.T)[1:, 0]) for g in system.generators):
        return system, _identity(system.r, system.exact)
    r = system.r
    exact = system.exact
    weights, rhs, trans = [], [], []
    for gen in system.generators:
        T = np.asarray(gen.T)
        t = T[0, 0]
        S = T[1:, 1:]
        a = T[1:, 0]
        weights.append(S / t if not exact else np.array([[x / t for x in row] for row in S], dtype=object))
        rhs.append({(0,) * max(system.p, 2): (a / t if not exact else np.array([x / t for x in a], dtype=object))})
        trans.append((0, 0))
    prob = TwistedCochainProblem("group", r - 1, weights, rhs, translations=trans, name="splitting")
    sol = mode_coboundary_solve(prob, raise_on_obstruction=False)
    if sol.status != "solved":
        raise NonSplitExtension(f"extension class is nonzero (residual {sol.residual_norm:.3e}); the linear part "
                                "does not split")
    m = sol.values[(0,) * max(system.p, 2)]
    Mmat = _identity(r, exact)
    Mmat[1:, 0] = m
    return linear_change(system, Mmat), Mmat


def _matpow(T: np.ndarray, d: int) -> np.ndarray:
    out = _identity(T.shape[0], T.dtype == object)
    for _ in range(d):
        out = out @ T
    return out


def power_system(system: GermSystem, d: int) -> GermSystem:
    """Replace every generator gamma by gamma^d (the pulled-back system on a d-fold cover)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    gens = []
    ident = system.identity()
    q0 = _params(system)
    for gen in system.generators:
        phi = _phi(system, gen)
        w, q = ident, q0
        gsum = None
        for _ in range(d):
            if gen.g is not None:
                gi = gen.g.compose(w.components() + q)
                gsum = gi if gsum is None else gsum + gi
            w, q = _step(system, gen, w, q, phi)
        Td = _matpow(np.asarray(gen.T), d)
        f_d = _drop_low(w.apply_matrix(Td) - ident)
        c_d = tuple(d * x for x in gen.c)
        if system.p:
            c_d = tuple(x - math.floor(x) for x in c_d) if system.exact else tuple(x % 1.0 for x in c_d)
        gens.append(Generator(Td, f_d, c_d, gsum, f"{gen.label}^{d}"))
    return _rebuild(system, gens)


def finite_cover_average(system: GermSystem, u_tilde: TruncatedSeries, d: int) -> TruncatedSeries:
    """Average u = (1/d) sum_nu T^nu u~(gamma^nu) of a linearization u~ of gamma^d."""
    if len(system.generators) != 1:
        raise ValueError("averaging is defined for a cyclic deck group (one generator)")
    gen = system.generators[0]
    T = np.asarray(gen.T)
    Td = _matpow(T, d)
    if not _is_zero_matrix(Td - _identity(system.r, system.exact), tol=1e-12):
        raise ValueError(f"monodromy is not torsion of order dividing {d}")
    if u_tilde.basis is not system.basis:
        raise ValueError("u~ must live on the system's basis")
    ident = system.identity()
    phi = _phi(system, gen)
    w, q = ident, _params(system)
    Tnu = _identity(system.r, system.exact)
    total = None
    for nu in range(d):
        term = u_tilde.compose(w.components() + q).apply_matrix(Tnu)
        total = term if total is None else total + term
        w, q = _step(system, gen, w, q, phi)
        Tnu = Tnu @ T
    u = total / (Fraction(d) if system.exact else float(d))
    lin = u.shell(1) - ident.shell(1)
    if not _is_zero_matrix(lin, tol=1e-12):
        raise InternalConsistencyError("averaged change lost its identity linear part")
    return u


# ---------------------------------------------------------------------------
# majorant tracking


def _premise(system: GermSystem, M: float, R: float):
    b = system.basis
    for gen in system.generators:
        C = to_complex_array(gen.f.coeffs)
        for n in range(2, system.N + 1):
            # sup over the torus of a Fourier polynomial is at most the l1 norm of its modes
            blk = np.abs(C[b.shells[n]])
            s = len(enumerate_multiindices(system.r, n))
            per_alpha = blk.reshape(s, -1, system.r).sum(axis=1).max(axis=1)
            if per_alpha.size and per_alpha.max() > M * R ** n * (1 + 1e-12):
                k = int(np.argmax(per_alpha))
                alpha = enumerate_multiindices(system.r, n)[k]
                raise ValueError(f"premise |f_alpha| <= M R^|alpha| fails at alpha = {alpha}: "
                                 f"{per_alpha[k]:.3e} > {M * R ** n:.3e}")


def system_K(system: GermSystem, state: NormalizationState | None = None) -> float:
    """Largest sup-norm ratio ||solution|| / ||rhs|| of the degree operators through the state's degree.

    Computed as the infinity-norm of the pseudoinverse for each degree and mode,
    and cross-checked with estimate_K on the basis right-hand sides.
    """
    top = system.N if state is None else state.degree
    K = 0.0
    for n in range(2, top + 1):
        zero_blocks = [np.zeros((system.basis.shells[n].stop - system.basis.shells[n].start, system.r))
                       for _ in system.generators]
        prob = degree_problem(system, n, zero_blocks)
        for m in _mode_list(system):
            K = max(K, _pinv_inf_norm(mode_matrix(prob, m)))
    return K


def _unit_family(system: GermSystem, n: int) -> list:
    """Problems with a single unit right-hand side entry (diagonal case)."""
    s = len(enumerate_multiindices(system.r, n))
    d = system.r * s
    zero_blocks = [np.zeros((s * len(_mode_list(system)), system.r)) for _ in system.generators]
    base = degree_problem(system, n, zero_blocks)
    out = []
    for m in _mode_list(system):
        for i in range(d):
            e = np.zeros(d, dtype=complex)
            e[i] = 1.0
            rhs = [{m: e.copy()} for _ in system.generators]
            out.append(TwistedCochainProblem("group", d, [to_complex_array(W) for W in base.weights], rhs,
                                             translations=base.translations, name=f"deg{n}-{m}-{i}"))
    return out


def verify_majorant_bounds(system: GermSystem, state: NormalizationState, params) -> BoundReport:
    """Check ||F_alpha|| <= A_alpha shellwise under the premise |f_alpha| <= M R^|alpha|."""
    from .majorant import majorant_series

    if not system.is_diagonal():
        raise ValueError("majorant tracking needs a decomposed (diagonal) linear part")
    if params.r != system.r:
        raise ValueError("majorant variable count differs from the system's")
    _premise(system, params.M, params.R)
    K_sys = system_K(system, state)
    fam = [p for n in range(2, state.degree + 1) for p in _unit_family(system, n)]
    if fam:
        K_emp = estimate_K(fam).K
        if K_emp > K_sys * (1 + 1e-9) + 1e-12:
            raise InternalConsistencyError("estimate_K exceeds the operator-norm bound")
    if params.K < K_sys * (1 - 1e-12):
        raise ValueError(f"premise fails: K = {params.K:.6g} is below the solver constant {K_sys:.6g}")
    maj = majorant_series(params, state.degree) if state.degree >= 2 else None
    margins, violations = {}, []
    b = system.basis
    C = to_complex_array(state.Psi.coeffs)
    for n in range(2, state.degree + 1):
        alphas = enumerate_multiindices(system.r, n)
        blk = np.abs(C[b.shells[n]]).reshape(len(alphas), -1, system.r).sum(axis=1).max(axis=1)
        worst = math.inf
        for alpha, val in zip(alphas, blk):
            A = maj.coeff(alpha)
            worst = min(worst, A - val)
            if val > A * (1 + 1e-12):
                violations.append((alpha, float(val), float(A)))
        margins[n] = float(worst)
    return BoundReport(not violations, margins, violations, float(params.K), float(K_sys))
