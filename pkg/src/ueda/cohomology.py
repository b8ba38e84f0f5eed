"""Twisted coboundary equations in two finite models.

Nerve model: 0-cochains F_j in C^d on the vertices of a finite nerve, edge
weights W_jk, and (delta F)_jk = F_j - W_jk F_k.  A right-hand side b is a
twisted 1-cocycle when b_ik = b_ij + W_ij b_jk on every triangle (i, j, k).

Group model: a 0-cochain is a vector-valued Fourier polynomial F(x) on the real
torus R^2/Z^2, each generator g acts by x -> x + c_g with weight W_g, and
(delta F)_g(x) = F(x) - W_g F(x + c_g).  The equation is diagonal in the Fourier
modes: F_m - exp(2 pi i m.c_g) W_g F_m = h_{g,m}.

Every solve returns the minimum-Euclidean-norm least-squares solution; when the
right side is not in the range, the residual is returned as the obstruction
representative.  Exact inputs (object arrays of Fractions / cyclotomic numbers)
are solved exactly, so a vanishing divisor is decided arithmetically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cyclotomic import root_of_unity
from .series import conj_transpose, parse_scalar, to_complex_array

__all__ = [
    "RESONANCE_TOL",
    "OBSTRUCTION_TOL",
    "CONDITIONING_TOL",
    "ConditioningError",
    "ObstructionNonzero",
    "LinearSolve",
    "solve_min_norm",
    "Nerve",
    "TwistedCochainProblem",
    "CochainSolution",
    "CocycleReport",
    "cocycle_check",
    "group_cocycle_check",
    "coboundary_matrix",
    "nerve_coboundary_solve",
    "mode_coboundary_solve",
    "mode_phase",
    "estimate_K",
    "singular_vector_family",
]

RESONANCE_TOL = 1e-12
OBSTRUCTION_TOL = 1e-10
# singular values strictly between RESONANCE_TOL and this are neither clearly
# zero nor safely invertible
CONDITIONING_TOL = 1e-9


class ConditioningError(ArithmeticError):
    def __init__(self, sigma: float):
        super().__init__(f"ill-conditioned system: singular value {sigma:.3e} lies between "
                         f"{RESONANCE_TOL:.0e} and {CONDITIONING_TOL:.0e}")
        self.sigma = sigma


class ObstructionNonzero(ArithmeticError):
    """A resonant direction carries a nonzero right-hand side."""

    def __init__(self, message: str, mode=None, component=None, norm: float = 0.0):
        super().__init__(message)
        self.mode = mode
        self.component = component
        self.norm = norm


# ---------------------------------------------------------------------------
# linear algebra core


def _is_exact(*arrays) -> bool:
    return any(np.asarray(a).dtype == object for a in arrays)


def _rref_solve(A: np.ndarray, b: np.ndarray):
    """Particular solution of a consistent exact system (free variables set to 0)."""
    A = [list(row) for row in A]
    b = list(b)
    m = len(A)
    n = len(A[0]) if m else 0
    pivots = []
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        b[row], b[piv] = b[piv], b[row]
        inv = 1 / A[row][col]
        A[row] = [x * inv for x in A[row]]
        b[row] = b[row] * inv
        for i in range(m):
            if i != row and A[i][col] != 0:
                f = A[i][col]
                A[i] = [x - f * y for x, y in zip(A[i], A[row])]
                b[i] = b[i] - f * b[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    if any(b[i] != 0 for i in range(row, m)):
        raise ArithmeticError("inconsistent exact system")
    x = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        x[col] = b[i]
    return np.array(x, dtype=object), len(pivots)


def _exact_block(A, b):
    AH = conj_transpose(A)
    x0, rank = _rref_solve(AH @ A, AH @ b)
    res = b - A @ x0
    y, _ = _rref_solve(A @ AH, A @ x0)
    return AH @ y, res, rank


def _components(A: np.ndarray):
    """Connected components of the row/column incidence graph of the nonzero pattern."""
    m, n = A.shape
    parent = list(range(m + n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    nz = np.array([[x != 0 for x in row] for row in A], dtype=bool).reshape(m, n)
    for i, j in zip(*np.nonzero(nz)):
        a, c = find(int(i)), find(m + int(j))
        if a != c:
            parent[a] = c
    groups = {}
    for i in range(m + n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        rows = [i for i in members if i < m]
        cols = [i - m for i in members if i >= m]
        out.append((rows, cols))
    return out


@dataclass
class LinearSolve:
    x: np.ndarray
    residual: np.ndarray
    status: str  # "solved" or "obstruction"
    sigma_min: float
    rank: int
    exact: bool

    @property
    def residual_norm(self) -> float:
        if self.residual.size == 0:
            return 0.0
        return float(np.linalg.norm(to_complex_array(self.residual)))


def solve_min_norm(A, b, resonance_tol: float = RESONANCE_TOL, obstruction_tol: float = OBSTRUCTION_TOL,
                   conditioning_tol: float = CONDITIONING_TOL) -> LinearSolve:
    """Minimum-norm least-squares solution of A x = b with a residual-based verdict."""
    A = np.asarray(A)
    b = np.asarray(b)
    m, n = A.shape
    if _is_exact(A, b):
        A = A.astype(object)
        b = b.astype(object)
        x = np.empty(n, dtype=object)
        x.fill(0)
        res = b.copy()
        rank = 0
        for rows, cols in _components(A):
            if not rows or not cols:
                continue
            sub = A[np.ix_(rows, cols)]
            xs, rs, rk = _exact_block(sub, b[rows])
            x[cols] = xs
            res[rows] = rs
            rank += rk
        status = "obstruction" if any(v != 0 for v in res) else "solved"
        smin = 0.0
        if rank == n and A.size:
            smin = float(np.linalg.svd(to_complex_array(A), compute_uv=False).min())
        return LinearSolve(x, res, status, smin, rank, True)
    A = A.astype(complex)
    b = b.astype(complex)
    if A.size == 0:
        return LinearSolve(np.zeros(n, complex), b.copy(), "solved" if not b.any() else "obstruction", 0.0, 0, False)
    U, S, Vh = np.linalg.svd(A, full_matrices=False)
    gray = S[(S > resonance_tol) & (S < conditioning_tol)]
    if gray.size:
        raise ConditioningError(float(gray.min()))
    rank = int((S > resonance_tol).sum())
    coef = (U[:, :rank].conj().T @ b) / S[:rank]
    x = Vh[:rank].conj().T @ coef
    res = b - A @ x
    rn = float(np.linalg.norm(res))
    status = "obstruction" if rn > obstruction_tol * max(1.0, float(np.linalg.norm(b))) else "solved"
    smin = float(S.min()) if len(S) == n else 0.0
    return LinearSolve(x, res, status, smin, rank, False)


# ---------------------------------------------------------------------------
# problem description


@dataclass
class Nerve:
    vertices: list
    edges: list
    triangles: list = field(default_factory=list)

    def __post_init__(self):
        self.vertices = list(self.vertices)
        self.edges = [tuple(e) for e in self.edges]
        self.triangles = [tuple(t) for t in self.triangles]
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise ValueError("duplicate vertices")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        for e in self.edges:
            if len(e) != 2 or e[0] not in vs or e[1] not in vs:
                raise ValueError(f"edge {e} references an unknown vertex")
        for t in self.triangles:
            if len(t) != 3:
                raise ValueError(f"triangle {t} must have three vertices")
            for a, c in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])):
                if (a, c) not in self.edges and (c, a) not in self.edges:
                    raise ValueError(f"triangle {t} is missing edge {(a, c)}")

    def vertex_index(self, v) -> int:
        return self.vertices.index(v)


def _matrix(x, exact: bool):
    arr = np.asarray(x, dtype=object)
    if arr.ndim == 3:  # [re, im] pairs
        out = np.empty(arr.shape[:2], dtype=object)
        for i in range(arr.shape[0]):
            for j in range(arr.shape[1]):
                out[i, j] = parse_scalar(list(arr[i, j]), exact)
        return out if exact else out.astype(complex)
    return arr if exact else arr.astype(complex)


def _vector(x, exact: bool):
    vals = [parse_scalar(z, exact) for z in x]
    return np.array(vals, dtype=object if exact else complex)


@dataclass
class TwistedCochainProblem:
    """delta F = h in the nerve model or the two-generator group model."""

    model: str
    dim: int
    weights: list
    rhs: list
    nerve: Nerve | None = None
    translations: list | None = None
    name: str = ""

    def __post_init__(self):
        if self.model not in ("nerve", "group"):
            raise ValueError("model must be 'nerve' or 'group'")
        if self.model == "nerve":
            if self.nerve is None:
                raise ValueError("nerve model needs a nerve")
            if len(self.weights) != len(self.nerve.edges) or len(self.rhs) != len(self.nerve.edges):
                raise ValueError("need one weight and one right-hand side per edge")
        else:
            if self.translations is None or len(self.translations) != len(self.weights):
                raise ValueError("group model needs one translation per generator")
            if len(self.rhs) != len(self.weights):
                raise ValueError("need one right-hand side per generator")
        for W in self.weights:
            if np.asarray(W).shape != (self.dim, self.dim):
                raise ValueError("weight has the wrong shape")

    @property
    def exact(self) -> bool:
        arrays = list(self.weights)
        if self.model == "nerve":
            arrays += list(self.rhs)
        else:
            arrays += [v for h in self.rhs for v in h.values()]
        return _is_exact(*arrays) if arrays else False

    def modes(self) -> list:
        ms = set()
        for h in self.rhs:
            ms.update(h.keys())
        return sorted(ms)

    @classmethod
    def from_json(cls, data: dict, exact: bool = False) -> "TwistedCochainProblem":
        model = data["model"]
        d = int(data["dim"])
        if model == "nerve":
            nerve = Nerve(data["vertices"], data["edges"], data.get("triangles", []))
            weights = [_matrix(W, exact) for W in data["weights"]]
            rhs = [_vector(v, exact) for v in data["rhs"]]
            return cls("nerve", d, weights, rhs, nerve=nerve, name=data.get("name", ""))
        weights, trans, rhs = [], [], []
        for g in data["generators"]:
            weights.append(_matrix(g["weight"], exact))
            trans.append(tuple(Fraction(str(c)) if exact else float(c) for c in g.get("translation", [0, 0])))
            rhs.append({tuple(t["mode"]): _vector(t["value"], exact) for t in g.get("rhs", [])})
        return cls("group", d, weights, rhs, translations=trans, name=data.get("name", ""))


@dataclass
class CochainSolution:
    status: str
    values: object  # (V, d) array for nerves, {mode: vector} for the group model
    residual: object
    residual_norm: float
    solution_norm: float
    rhs_norm: float
    smallest_divisor: float
    divisors: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    def to_json(self) -> dict:
        def vec(v):
            return [[float(z.real), float(z.imag)] for z in to_complex_array(np.asarray(v)).reshape(-1)]

        if isinstance(self.values, dict):
            vals = [{"mode": list(k), "value": vec(v)} for k, v in sorted(self.values.items())]
        else:
            vals = [vec(row) for row in self.values]
        return {"status": self.status, "values": vals, "residual_norm": self.residual_norm,
                "solution_norm": self.solution_norm, "rhs_norm": self.rhs_norm,
                "smallest_divisor": self.smallest_divisor}


def _sup(arrays) -> float:
    m = 0.0
    for a in arrays:
        a = to_complex_array(np.asarray(a))
        if a.size:
            m = max(m, float(np.abs(a).max()))
    return m


# ---------------------------------------------------------------------------
# nerve model


def _edge_data(problem: TwistedCochainProblem, a, c):
    """(W_ac, b_ac) in the requested orientation."""
    edges = problem.nerve.edges
    if (a, c) in edges:
        k = edges.index((a, c))
        return problem.weights[k], problem.rhs[k]
    k = edges.index((c, a))
    W = np.asarray(problem.weights[k])
    Winv = conj_transpose(W) if W.dtype == object else np.linalg.inv(W)
    return Winv, -(Winv @ problem.rhs[k])


@dataclass
class CocycleReport:
    passed: bool
    max_violation: float
    worst: tuple | None
    weight_violation: float = 0.0


def cocycle_check(problem: TwistedCochainProblem, tol: float = 1e-10) -> CocycleReport:
    """b_ik = b_ij + W_ij b_jk (and W_ij W_jk = W_ik) on every triangle."""
    if problem.model != "nerve":
        raise ValueError("cocycle_check applies to the nerve model; use group_cocycle_check")
    worst, wv, wtri = 0.0, 0.0, None
    for t in problem.nerve.triangles:
        i, j, k = t
        Wij, bij = _edge_data(problem, i, j)
        Wjk, bjk = _edge_data(problem, j, k)
        Wik, bik = _edge_data(problem, i, k)
        v = _sup([bik - bij - Wij @ bjk])
        wv = max(wv, _sup([np.asarray(Wij) @ np.asarray(Wjk) - np.asarray(Wik)]))
        if wtri is None or v > worst:
            worst, wtri = v, t
    exact = problem.exact
    passed = (worst == 0 and wv == 0) if exact else (worst <= tol and wv <= tol)
    return CocycleReport(passed, worst, wtri if problem.nerve.triangles else None, wv)


def coboundary_matrix(problem: TwistedCochainProblem) -> np.ndarray:
    """Matrix of delta: rows (edge, component), columns (vertex, component)."""
    nerve, d = problem.nerve, problem.dim
    V, E = len(nerve.vertices), len(nerve.edges)
    exact = problem.exact
    D = np.empty((E * d, V * d), dtype=object) if exact else np.zeros((E * d, V * d), dtype=complex)
    if exact:
        D.fill(0)
    eye = np.eye(d, dtype=int)
    for e, (j, k) in enumerate(nerve.edges):
        jj, kk = nerve.vertex_index(j), nerve.vertex_index(k)
        rows = slice(e * d, (e + 1) * d)
        D[rows, jj * d:(jj + 1) * d] = D[rows, jj * d:(jj + 1) * d] + eye
        D[rows, kk * d:(kk + 1) * d] = D[rows, kk * d:(kk + 1) * d] - np.asarray(problem.weights[e])
    return D


def nerve_coboundary_solve(problem: TwistedCochainProblem, check_cocycle: bool = True) -> CochainSolution:
    if problem.model != "nerve":
        raise ValueError("not a nerve problem")
    if check_cocycle:
        rep = cocycle_check(problem)
        if not rep.passed:
            raise ValueError(f"right-hand side is not a cocycle (violation {rep.max_violation:.3e} on {rep.worst})")
    D = coboundary_matrix(problem)
    b = np.concatenate([np.asarray(v) for v in problem.rhs]) if problem.rhs else np.zeros(0)
    ls = solve_min_norm(D, b)
    d = problem.dim
    vals = ls.x.reshape(len(problem.nerve.vertices), d)
    if ls.status == "solved":
        _substitution_check(D, ls.x, b, ls.exact)
    res = ls.residual.reshape(len(problem.nerve.edges), d)
    return CochainSolution(ls.status, vals, res, ls.residual_norm, _sup([vals]), _sup([b]), ls.sigma_min)


def _substitution_check(A, x, b, exact):
    r = b - A @ x
    if exact:
        if any(v != 0 for v in r):
            raise AssertionError("exact solution fails substitution")
        return
    err = float(np.abs(r).max()) if r.size else 0.0
    if err > OBSTRUCTION_TOL * max(1.0, _sup([b])):
        raise AssertionError(f"substitution residual {err:.3e} above tolerance")


# ---------------------------------------------------------------------------
# group (Fourier mode) model


def mode_phase(mode, translation, exact: bool):
    """exp(2 pi i m.c), exactly for rational translations."""
    s = sum(Fraction(m) * Fraction(c) for m, c in zip(mode, translation)) if exact else \
        sum(m * float(c) for m, c in zip(mode, translation))
    if exact:
        return root_of_unity(s.numerator, s.denominator)
    return complex(np.exp(2j * np.pi * s))


def mode_matrix(problem: TwistedCochainProblem, mode) -> np.ndarray:
    """Stacked operators I - exp(2 pi i m.c_g) W_g over the generators."""
    d = problem.dim
    exact = problem.exact
    blocks = []
    for W, c in zip(problem.weights, problem.translations):
        ph = mode_phase(mode, c, exact)
        W = np.asarray(W)
        if exact:
            B = -(W.astype(object) * ph)
            for i in range(d):
                B[i, i] = B[i, i] + 1
        else:
            B = np.eye(d) - ph * W.astype(complex)
        blocks.append(B)
    return np.concatenate(blocks, axis=0)


def group_cocycle_check(problem: TwistedCochainProblem, tol: float = 1e-10) -> CocycleReport:
    """(1 - b.) h_a = (1 - a.) h_b per mode for the first two generators."""
    if problem.model != "group" or len(problem.weights) < 2:
        return CocycleReport(True, 0.0, None)
    exact = problem.exact
    worst, where = 0.0, None
    d = problem.dim
    zero = np.zeros(d, dtype=object if exact else complex)
    for m in problem.modes():
        ops = mode_matrix(problem, m)
        La, Lb = ops[:d], ops[d:2 * d]
        ha = problem.rhs[0].get(m, zero)
        hb = problem.rhs[1].get(m, zero)
        v = _sup([Lb @ ha - La @ hb])
        if v > worst:
            worst, where = v, m
    passed = worst == 0 if exact else worst <= tol
    return CocycleReport(passed, worst, where)


def mode_coboundary_solve(problem: TwistedCochainProblem, raise_on_obstruction: bool = True) -> CochainSolution:
    """Solve mode by mode; resonant modes with nonzero data are obstructions."""
    if problem.model != "group":
        raise ValueError("not a group-model problem")
    d = problem.dim
    exact = problem.exact
    zero = np.zeros(d, dtype=object if exact else complex)
    if exact:
        zero.fill(0)
    vals, resid, divisors = {}, {}, {}
    smallest = np.inf
    rnorm2 = 0.0
    status = "solved"
    for m in problem.modes():
        A = mode_matrix(problem, m)
        b = np.concatenate([h.get(m, zero) for h in problem.rhs])
        ls = solve_min_norm(A, b)
        divisors[m] = ls.sigma_min
        smallest = min(smallest, ls.sigma_min)
        vals[m] = ls.x
        resid[m] = ls.residual
        rnorm2 += ls.residual_norm ** 2
        if ls.status == "solved":
            _substitution_check(A, ls.x, b, exact)
        else:
            status = "obstruction"
            if raise_on_obstruction:
                rc = to_complex_array(ls.residual)
                comp = int(np.argmax(np.abs(rc))) % d
                raise ObstructionNonzero(f"resonant mode {m} component {comp} carries a nonzero class "
                                         f"(residual {ls.residual_norm:.3e})", m, comp, ls.residual_norm)
    rhs_norm = _sup([v for h in problem.rhs for v in h.values()])
    return CochainSolution(status, vals, resid, float(np.sqrt(rnorm2)), _sup(vals.values()), rhs_norm,
                           float(smallest), divisors)


# ---------------------------------------------------------------------------
# solution-norm constant


def _solve_any(problem: TwistedCochainProblem) -> CochainSolution:
    if problem.model == "nerve":
        return nerve_coboundary_solve(problem, check_cocycle=False)
    return mode_coboundary_solve(problem, raise_on_obstruction=False)


def _norm(values, kind: str) -> float:
    if isinstance(values, dict):
        arrs = list(values.values())
    else:
        arrs = [values]
    if kind == "sup":
        return _sup(arrs)
    if kind == "l2":
        return float(np.sqrt(sum(float(np.sum(np.abs(to_complex_array(np.asarray(a))) ** 2)) for a in arrs)))
    raise ValueError(f"unknown norm {kind!r}")


@dataclass
class KEstimate:
    K: float
    ratios: list
    argmax: int | None


def estimate_K(problems: Sequence[TwistedCochainProblem], norm: str = "sup") -> KEstimate:
    """max over the family of ||minimum-norm solution|| / ||right-hand side||."""
    ratios = []
    for i, p in enumerate(problems):
        sol = _solve_any(p)
        if not sol.solved:
            label = p.name or f"#{i}"
            raise ValueError(f"problem {label} is not solvable (residual {sol.residual_norm:.3e})")
        if p.model == "nerve":
            rhs_n = _norm(np.concatenate([np.asarray(v) for v in p.rhs]), norm)
        else:
            rhs_n = _norm({(g, m): v for g, h in enumerate(p.rhs) for m, v in h.items()}, norm)
        ratios.append(0.0 if rhs_n == 0 else _norm(sol.values, norm) / rhs_n)
    if not ratios:
        return KEstimate(0.0, [], None)
    k = int(np.argmax(ratios))
    return KEstimate(float(ratios[k]), ratios, k)


def singular_vector_family(problem: TwistedCochainProblem) -> list[TwistedCochainProblem]:
    """Unit right-hand sides along the left singular vectors spanning the range of delta.

    With the l2 norm this family attains K = 1 / (smallest nonzero singular value).
    """
    if problem.model != "nerve":
        raise ValueError("defined for the nerve model")
    D = to_complex_array(coboundary_matrix(problem))
    U, S, _ = np.linalg.svd(D, full_matrices=False)
    rank = int((S > RESONANCE_TOL).sum())
    out = []
    d = problem.dim
    weights = [to_complex_array(np.asarray(W)) for W in problem.weights]
    for k in range(rank):
        u = U[:, k]
        rhs = [u[e * d:(e + 1) * d] for e in range(len(problem.nerve.edges))]
        out.append(TwistedCochainProblem("nerve", d, weights, rhs, nerve=problem.nerve, name=f"sv{k}"))
    return out
