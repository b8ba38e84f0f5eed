"""Command-line front end.

Subcommands write their reports into the ``--out`` directory:

* ``classify``  classify.json and scan.csv (n, alpha, distance, bound, pass)
* ``majorant``  majorant.json and majorant.csv (n, B_n, Bhat_n, ratio)
* ``normalize`` normalize.json
* ``example``   example_<name>.json
* ``scan``      scan.json and scan.csv (columns depend on the scan kind)

Exit status: 0 completed, 2 mathematical negative result (finite type,
Diophantine violation, failed Siegel property, torsion divisor), 1 input or
usage error.  Every JSON report carries the tool version and a hash of the
configuration; reports do not depend on ``--threads``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bundles import FlatBundleTuple, classify, epsilon_sequence, golden_tuple, siegel_check
from .cohomology import ObstructionNonzero
from .cyclotomic import Cyclotomic
from .germs import EXAMPLES, generate_example, random_diophantine
from .majorant import (
    MajorantParams,
    TorsionDivisorError,
    diagonal_bounds,
    implicit_cross_check,
    majorant_series,
    weighted_majorant_series,
)
from .normalizer import GermSystem, InternalConsistencyError, normalize

__all__ = ["RunConfig", "run", "main", "InputError"]

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2
SIEGEL_RANGE = 30


class InputError(ValueError):
    """Bad input file or arguments (exit status 1)."""


@dataclass
class RunConfig:
    subcommand: str
    input: str | None = None
    out: str = "."
    mode: str | None = None  # None: the input's or the example's own default
    degree: int | None = None
    scan_bound: int = 200
    seed: int = 0
    threads: int = 1
    name: str | None = None
    A: float = 2.0
    hypersurface: bool = False

    def __post_init__(self):
        if self.subcommand not in ("classify", "majorant", "normalize", "example", "scan"):
            raise InputError(f"unknown subcommand {self.subcommand!r}")
        if self.mode not in (None, "exact", "float"):
            raise InputError("--mode must be 'exact' or 'float'")
        if self.degree is not None and self.degree < 2:
            raise InputError("--degree must be >= 2")
        if self.scan_bound < 1:
            raise InputError("--scan-bound must be >= 1")
        if self.threads < 1:
            raise InputError("--threads must be >= 1")
        if self.subcommand == "example" and self.name is None:
            raise InputError("example needs a name")

    def hashed_fields(self) -> dict:
        """Everything that can change a report (output location and thread count cannot)."""
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        d["input"] = _file_digest(self.input) if self.input else None
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _file_digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None


def _plain(x):
    """JSON fallback for numbers produced by the library."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, Cyclotomic):
        z = complex(x)
        return [z.real, z.imag]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return _finite(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float):
        return _finite(obj)
    if isinstance(obj, (np.floating,)):
        return _finite(float(obj))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, default=_plain) + "\n"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (tuple, list)):
        return " ".join(str(int(x)) for x in v)
    return str(v)


class Reporter:
    def __init__(self, config: RunConfig):
        self.config = config
        self.dir = Path(config.out)
        self.written = []

    def header(self) -> dict:
        return {"tool": "ueda", "version": __version__, "config_hash": self.config.config_hash(),
                "subcommand": self.config.subcommand}

    def json(self, name: str, body: dict):
        self._write(name, dumps({**self.header(), **body}))

    def csv(self, name: str, rows, header):
        self._write(name, _csv(rows, header))

    def _write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text)
        self.written.append(str(path))


# ---------------------------------------------------------------------------
# subcommands


def _tuple_input(config: RunConfig) -> FlatBundleTuple:
    if config.input is None:
        return golden_tuple(1, 1)
    data = load_json(config.input)
    try:
        return FlatBundleTuple.from_json(data, exact=config.mode == "exact")
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"{config.input}: invalid bundle tuple: {e}") from None


def _classify_tuple(tup: FlatBundleTuple, scan_bound: int, A: float, threads: int):
    rep = classify(tup, scan_bound, threads=threads)
    m = min(SIEGEL_RANGE, scan_bound)
    siegel = siegel_check(epsilon_sequence(tup, 1.0, m, threads), m)
    negative = not (rep.verdict == "S_A" and rep.holds(A)) or siegel.property_a is None or not siegel.property_b
    return rep, siegel, negative


def cmd_classify(config: RunConfig, out: Reporter) -> int:
    tup = _tuple_input(config)
    rep, siegel, negative = _classify_tuple(tup, config.scan_bound, config.A, config.threads)
    rows = []
    for n, a, d in rep.shells:
        bound = (2 * n) ** (-config.A)
        rows.append((n, a, d, bound, float(d) >= bound))
    out.csv("scan.csv", rows, ["n", "alpha", "distance", "bound", "pass"])
    body = {"tuple": tup.to_json(), "classification": rep.to_json(), "target_A": config.A,
            "holds_target_A": rep.holds(config.A), "siegel": siegel.to_json(), "siegel_range": min(SIEGEL_RANGE, config.scan_bound),
            "negative": negative}
    if rep.verdict == "E0":
        body["note"] = "torsion monodromy: some eps_n is infinite, so property (a) fails"
    out.json("classify.json", body)
    return EXIT_NEGATIVE if negative else EXIT_OK


def _majorant_params(config: RunConfig, data: dict | None, N: int) -> MajorantParams:
    data = data or {}
    try:
        K, M, R, r = float(data.get("K", 1.0)), float(data.get("M", 1.0)), float(data.get("R", 1.0)), int(data.get("r", 1))
        eps = None
        if "tuple" in data:
            tup = FlatBundleTuple.from_json(data["tuple"], exact=config.mode == "exact")
            if tup.r != r:
                raise ValueError("tuple size differs from r")
            eps = epsilon_sequence(tup, K, N - 1, config.threads)
        return MajorantParams(K, M, R, r, eps)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"invalid majorant parameters: {e}") from None


def _majorant_report(params: MajorantParams, N: int):
    weighted = params.eps is not None
    series = weighted_majorant_series(params, N) if weighted else majorant_series(params, N)
    plain = diagonal_bounds(series, "plain")
    hat = diagonal_bounds(series, "hat")
    check = None if weighted or series.sigma != 1.0 else implicit_cross_check(params, N, series)
    return series, plain, hat, check


def cmd_majorant(config: RunConfig, out: Reporter) -> int:
    data = load_json(config.input) if config.input else None
    N = config.degree or 12
    params = _majorant_params(config, data, N)
    try:
        series, plain, hat, check = _majorant_report(params, N)
    except TorsionDivisorError as e:
        out.json("majorant.json", {"error": str(e), "torsion_index": e.index, "negative": True})
        return EXIT_NEGATIVE
    ratios = plain.ratios()
    rows = [(n, float(plain.values[n]), float(hat.values[n]), float(ratios[n]) if n >= 3 else float("nan"))
            for n in range(2, N + 1)]
    out.csv("majorant.csv", rows, ["n", "B_n", "Bhat_n", "ratio"])
    body = {"series": series.to_json(), "B": plain.values[2:], "Bhat": hat.values[2:],
            "log_B": plain.log_values[2:], "log_Bhat": hat.log_values[2:],
            "radius_estimate": {"plain": plain.radius_estimate, "hat": hat.radius_estimate, "note": plain.note},
            "negative": False}
    if check is not None:
        body["implicit_cross_check"] = {"max_abs_deviation": check.max_abs_deviation,
                                        "max_rel_deviation": check.max_rel_deviation, "iterations": check.iterations}
    if params.eps is not None:
        m = params.eps.n_max
        body["siegel"] = siegel_check(params.eps, m).to_json()
    out.json("majorant.json", body)
    return EXIT_OK


def _load_system(config: RunConfig) -> GermSystem:
    if config.input is None:
        raise InputError("normalize needs --input")
    data = load_json(config.input)
    if isinstance(data, dict) and "system" in data:
        data = data["system"]  # an example or normalize output file
    if not isinstance(data, dict):
        raise InputError(f"{config.input}: germ system must be a JSON object")
    if config.degree is not None:
        data = {**data, "N": config.degree}
    try:
        return GermSystem.from_json(data, config.mode)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"{config.input}: invalid germ system: {e}") from None


def _normalize_body(system: GermSystem, hypersurface: bool):
    try:
        res = normalize(system, hypersurface=hypersurface)
    except ValueError as e:
        raise InputError(str(e)) from None
    body = {"system": system.to_json(), "report": res.to_json(), "negative": not res.infinite}
    return body, res


def cmd_normalize(config: RunConfig, out: Reporter) -> int:
    system = _load_system(config)
    body, res = _normalize_body(system, config.hypersurface)
    out.json("normalize.json", body)
    return EXIT_OK if res.infinite else EXIT_NEGATIVE


def _example_params(config: RunConfig) -> dict:
    params = load_json(config.input) if config.input else {}
    if not isinstance(params, dict):
        raise InputError("example parameters must be a JSON object")
    if config.degree is not None:
        params["N"] = config.degree
    if config.name == "random_diophantine":
        params.setdefault("seed", config.seed)
    elif config.mode is not None:
        params.setdefault("mode", config.mode)
    return params


def cmd_example(config: RunConfig, out: Reporter) -> int:
    if config.name not in EXAMPLES:
        raise InputError(f"unknown example {config.name!r}; choose from {', '.join(sorted(EXAMPLES))}")
    params = _example_params(config)
    try:
        system = generate_example(config.name, **params)
    except (TypeError, ValueError) as e:
        raise InputError(f"example {config.name}: {e}") from None
    body, res = _normalize_body(system, False)
    body["example"] = config.name
    body["params"] = params
    out.json(f"example_{config.name}.json", body)
    return EXIT_OK if res.infinite else EXIT_NEGATIVE


# -- scan ---------------------------------------------------------------------


def _random_tuples(count: int, r: int, genus: int, seed: int):
    rng = np.random.default_rng(seed)
    return [FlatBundleTuple.from_angles(rng.random((r, 2 * genus)).tolist(), genus) for _ in range(count)]


def _scan_classify(config: RunConfig, desc: dict):
    if "tuples" in desc:
        tuples = [FlatBundleTuple.from_json(t, exact=config.mode == "exact") for t in desc["tuples"]]
    else:
        tuples = _random_tuples(int(desc.get("count", 10)), int(desc.get("r", 2)), int(desc.get("genus", 1)),
                                config.seed)
    A = float(desc.get("A", config.A))

    def one(tup):
        rep, siegel, negative = _classify_tuple(tup, config.scan_bound, A, 1)
        return (tup.r, rep.verdict, rep.fitted_A, rep.witness, rep.holds(A), siegel.property_a, siegel.property_b,
                len(siegel.violations), negative)

    rows = _pmap(one, tuples, config.threads)
    header = ["index", "r", "verdict", "fitted_A", "witness", "holds_A", "siegel_a", "siegel_b", "siegel_b_violations",
              "negative"]
    return header, [(i, *row) for i, row in enumerate(rows)], [t.to_json() for t in tuples]


def _scan_majorant(config: RunConfig, desc: dict):
    N = int(desc.get("N", config.degree or 12))
    grid = [(K, M, R, r) for K in desc.get("K", [0.5, 1, 2]) for M in desc.get("M", [0.5, 1, 2])
            for R in desc.get("R", [0.5, 1, 2]) for r in desc.get("r", [1, 2, 3])]

    def one(point):
        K, M, R, r = point
        params = MajorantParams(float(K), float(M), float(R), int(r))
        series, plain, hat, check = _majorant_report(params, N)
        a2 = min(v for a, v in series.items() if sum(a) == 2)
        return (K, M, R, r, N, a2, float(plain.values[N]), float(hat.values[N]), plain.radius_estimate,
                check.max_rel_deviation if check else float("nan"), False)

    rows = _pmap(one, grid, config.threads)
    header = ["K", "M", "R", "r", "N", "A_deg2", "B_N", "Bhat_N", "radius_estimate", "newton_rel_dev", "negative"]
    return header, rows, None


def _scan_normalize(config: RunConfig, desc: dict):
    seeds = range(config.seed, config.seed + int(desc.get("count", 10)))
    r, N = int(desc.get("r", 2)), int(desc.get("N", config.degree or 10))
    scale = float(desc.get("scale", 0.1))

    def one(seed):
        res = normalize(random_diophantine(r=r, N=N, seed=seed, scale=scale))
        return (seed, r, N, res.type_label, res.residual, not res.infinite)

    rows = _pmap(one, list(seeds), config.threads)
    return ["seed", "r", "N", "type", "residual", "negative"], rows, None


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


SCANS = {"classify": _scan_classify, "majorant": _scan_majorant, "normalize": _scan_normalize}


def cmd_scan(config: RunConfig, out: Reporter) -> int:
    desc = load_json(config.input) if config.input else {"kind": "majorant"}
    if not isinstance(desc, dict):
        raise InputError("scan description must be a JSON object")
    kind = desc.get("kind", "majorant")
    if kind not in SCANS:
        raise InputError(f"unknown scan kind {kind!r}; choose from {', '.join(sorted(SCANS))}")
    try:
        header, rows, inputs = SCANS[kind](config, desc)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"invalid scan description: {e}") from None
    out.csv("scan.csv", rows, header)
    negative = any(row[-1] for row in rows)
    body = {"kind": kind, "columns": header, "rows": [list(r) for r in rows], "negative": negative}
    if inputs is not None:
        body["inputs"] = inputs
    out.json("scan.json", body)
    return EXIT_NEGATIVE if negative else EXIT_OK


COMMANDS = {"classify": cmd_classify, "majorant": cmd_majorant, "normalize": cmd_normalize,
            "example": cmd_example, "scan": cmd_scan}


def run(config: RunConfig) -> int:
    """Execute one subcommand; returns the exit status."""
    out = Reporter(config)
    return COMMANDS[config.subcommand](config, out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--mode", choices=["exact", "float"], help="arithmetic (default: float, or the input's own)")
    common.add_argument("--degree", type=int, help="truncation degree N")
    common.add_argument("--scan-bound", type=int, default=200, help="largest |a| in lattice scans")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    p = argparse.ArgumentParser(prog="ueda", description="Normalization, obstruction and Diophantine tools.")
    p.add_argument("--version", action="version", version=f"ueda {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    c = sub.add_parser("classify", parents=[common], help="E0 / S_A classification of a bundle tuple")
    c.add_argument("--A", type=float, default=2.0, help="exponent tested by the scan (default 2)")
    sub.add_parser("majorant", parents=[common], help="majorant series and diagonal bounds")
    n = sub.add_parser("normalize", parents=[common], help="normalize a germ system")
    n.add_argument("--hypersurface", action="store_true", help="keep the leaf's hypersurface w_1 = 0 invariant")
    e = sub.add_parser("example", parents=[common], help="build a named example and normalize it")
    e.add_argument("name", help=", ".join(sorted(EXAMPLES)))
    s = sub.add_parser("scan", parents=[common], help="sweep a parameter grid")
    s.add_argument("--A", type=float, default=2.0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        config = RunConfig(args.subcommand, args.input, args.out, args.mode, args.degree, args.scan_bound, args.seed,
                           args.threads, getattr(args, "name", None), getattr(args, "A", 2.0),
                           getattr(args, "hypersurface", False))
        status = run(config)
    except InputError as e:
        print(f"ueda: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ObstructionNonzero as e:  # pragma: no cover - normalize reports these itself
        print(f"ueda: {e}", file=sys.stderr)
        return EXIT_NEGATIVE
    except ArithmeticError as e:
        print(f"ueda: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except InternalConsistencyError as e:
        print(f"ueda: internal error: {e}", file=sys.stderr)
        return EXIT_INPUT
    verdict = {EXIT_OK: "ok", EXIT_NEGATIVE: "negative result"}[status]
    print(f"ueda {config.subcommand}: {verdict}")
    return status
