"""Command line: ``toricqh qh``, ``toricqh fock``, ``toricqh hyper``, ``toricqh golden``.

Reports are JSON written with sorted keys, so equal inputs give equal bytes.
Wall-clock timing is included only with ``--timing``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from toricqh.hypersurface import (
    FanoGuardError,
    aq_presentation,
    delta_star,
    experimental_dims,
    givental_compare,
    prop34_checks,
)
from toricqh.koszul_qh import QuotientPresentation, QuotientUnstable, quotient_ring
from toricqh.lattice_fan import (
    Fan,
    FanError,
    PLFunction,
    convexity_check,
    height_function,
    product_fan,
    projective_fan,
    validate_fan,
)
from toricqh.scalars import Q, scalar_from_json, scalar_to_json
from toricqh.vertex_fock import FOCK_CHECKS, operator_sample, run_fock_check

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_FAN = 3
EXIT_PHI = 4
EXIT_UNSTABLE = 5
EXIT_CHECK = 6
EXIT_GUARD = 7

WORKERS_ENV = "TORICQH_WORKERS"


class CliError(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload or {}


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------


def parse_q(text: str):
    if text == "symbolic":
        return Q
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise CliError(EXIT_PARSE, f"bad q value {text!r}: {e}") from None


def q_mode(q) -> str:
    return "symbolic" if q is Q or q == Q else str(Fraction(q))


def fan_from_data(obj) -> tuple[Fan, PLFunction]:
    """Build and validate a fan from the fan-file schema (cones are 1-based)."""
    errors = []
    if not isinstance(obj, dict):
        raise CliError(EXIT_PARSE, "fan file must hold a JSON object")
    for key in ("rank", "rays", "max_cones", "phi"):
        if key not in obj:
            errors.append(f"missing key {key!r}")
    if errors:
        raise CliError(EXIT_PARSE, "; ".join(errors))
    rank, rays, cones, phi = obj["rank"], obj["rays"], obj["max_cones"], obj["phi"]
    if not isinstance(rank, int) or rank < 1:
        errors.append("rank must be a positive integer")
    if not (isinstance(rays, list) and all(isinstance(r, list) and all(isinstance(x, int) for x in r) for r in rays)):
        errors.append("rays must be a list of integer lists")
    if not (isinstance(cones, list) and all(isinstance(c, list) and all(isinstance(x, int) for x in c) for c in cones)):
        errors.append("max_cones must be a list of integer lists")
    if not (isinstance(phi, list) and all(isinstance(x, int) for x in phi)):
        errors.append("phi must be a list of integers")
    if errors:
        raise CliError(EXIT_PARSE, "; ".join(errors))
    if len(phi) != len(rays):
        raise CliError(EXIT_PARSE, f"phi has {len(phi)} values for {len(rays)} rays")
    for k, c in enumerate(cones):
        for j in c:
            if not 1 <= j <= len(rays):
                raise CliError(EXIT_PARSE, f"max_cones[{k}] refers to ray {j}, which does not exist")
    try:
        fan = Fan(rank, tuple(map(tuple, rays)), tuple(tuple(j - 1 for j in c) for c in cones))
    except FanError as e:
        raise CliError(EXIT_PARSE, str(e)) from None
    rep = validate_fan(fan)
    if not rep.ok:
        raise CliError(EXIT_FAN, f"invalid fan: {rep}", {"failed": sorted(rep.checks_failed())})
    pl = PLFunction(fan, tuple(phi))
    if not convexity_check(pl, strict=True):
        raise CliError(EXIT_PHI, "phi is not strictly convex on this fan")
    return fan, pl


def parse_fan_file(path) -> tuple[Fan, PLFunction]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise CliError(EXIT_PARSE, f"{path}: {e.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise CliError(EXIT_PARSE, f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    return fan_from_data(obj)


def builtin_fan(name: str) -> tuple[Fan, PLFunction]:
    """``pn:N`` or ``prod:a,b,...`` (a product of projective spaces)."""
    kind, _, arg = name.partition(":")
    try:
        dims = [int(x) for x in arg.split(",")]
    except ValueError:
        raise CliError(EXIT_PARSE, f"bad builtin {name!r}") from None
    if kind == "pn" and len(dims) == 1 and dims[0] >= 1:
        fan = projective_fan(dims[0])
        return fan, height_function(fan)
    if kind == "prod" and dims and min(dims) >= 1:
        fan = projective_fan(dims[0])
        for d in dims[1:]:
            fan = product_fan(fan, projective_fan(d))
        return fan, PLFunction(fan, (1,) * len(fan.rays))
    raise CliError(EXIT_PARSE, f"unknown builtin {name!r}; use pn:N or prod:a,b")


# ---------------------------------------------------------------------------
# ring reports
# ---------------------------------------------------------------------------


@dataclass
class RingReport:
    dimension: int
    basis: list
    basis_points: list
    structure_constants: dict
    minpolys: dict
    q_mode: str
    stabilization_level: int
    working_level: int
    trajectory: list
    timing: float | None = None
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_presentation(cls, p: QuotientPresentation, timing: bool = False) -> "RingReport":
        sc = {
            f"{i},{j}": [scalar_to_json(c) for c in v]
            for (i, j), v in sorted(p.structure_constants.items())
            if i <= j
        }
        return cls(
            dimension=p.dim,
            basis=p.basis_labels(),
            basis_points=[list(b) for b in p.basis],
            structure_constants=sc,
            minpolys={k: [scalar_to_json(c) for c in v] for k, v in p.minpolys.items()},
            q_mode=q_mode(p.q),
            stabilization_level=p.stabilization_level,
            working_level=p.working_level,
            trajectory=[list(t) for t in p.trajectory],
            timing=round(p.timing, 3) if timing else None,
        )

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RingReport":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise CliError(EXIT_PARSE, f"unsupported schema version {obj.get('schema_version')}")
        return cls(**obj)

    def minpoly(self, name: str) -> tuple:
        return tuple(scalar_from_json(c) for c in self.minpolys[name])


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, output: str | None):
    text = dumps(obj)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def compute_ring(fan, phi, q, max_level: int = 40, timing: bool = False) -> dict:
    return RingReport.from_presentation(quotient_ring(fan, phi, q, max_level), timing).to_json()


def _ring_job(job):
    fan, phi, qtext, max_level, timing = job
    q = parse_q(qtext)
    try:
        return EXIT_OK, compute_ring(fan, phi, q, max_level, timing)
    except QuotientUnstable as e:
        return EXIT_UNSTABLE, {
            "error": str(e),
            "q_mode": q_mode(q),
            "schema_version": SCHEMA_VERSION,
            "trajectory": [list(t) for t in e.trajectory],
        }


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise CliError(EXIT_PARSE, f"{WORKERS_ENV} must be an integer") from None


def cmd_qh(args) -> int:
    fan, phi = builtin_fan(args.builtin) if args.builtin else parse_fan_file(args.fan)
    qs = args.q.split(",")
    for t in qs:
        parse_q(t)
    jobs = [(fan, phi, t, args.max_level, args.timing) for t in qs]
    workers = _workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_ring_job, jobs))
    else:
        results = [_ring_job(j) for j in jobs]
    code = max(c for c, _ in results)
    reports = [r for _, r in results]
    _emit(reports[0] if len(reports) == 1 else {"reports": reports}, args.output)
    return code


# ---------------------------------------------------------------------------
# fock and hypersurface reports
# ---------------------------------------------------------------------------


def fock_report(N: int, checks, q, weight: int = 2, stride: int = 7) -> dict:
    sample = None
    out = []
    for name in checks:
        if name not in ("koszul-match", "lemma26") and sample is None:
            sample = operator_sample(N, weight, stride=stride)
        for r in run_fock_check(name, N, q, sample):
            out.append(asdict(r) | {"check": name})
    return {
        "N": N,
        "weight": weight,
        "q_mode": q_mode(q),
        "sample_size": len(sample) if sample is not None else 0,
        "checks": out,
        "ok": all(r["ok"] for r in out),
        "schema_version": SCHEMA_VERSION,
    }


def cmd_fock(args) -> int:
    checks = args.check or list(FOCK_CHECKS)
    if args.weight > 2:
        raise CliError(EXIT_PARSE, "weight cap is 2")
    if "lemma26" in checks and args.n < 2:
        raise CliError(EXIT_GUARD, "lemma26 needs N >= 2")
    rep = fock_report(args.n, checks, parse_q(args.q), args.weight, args.stride)
    _emit(rep, args.output)
    return EXIT_OK if rep["ok"] else EXIT_CHECK


def _poly_json(p) -> list:
    return [scalar_to_json(c) for c in p]


def _load_weights(path) -> dict | None:
    if not path:
        return None
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(EXIT_PARSE, f"{path}: {e}") from None
    try:
        return {tuple(int(x) for x in e["n"]): int(e["g"]) for e in obj}
    except (TypeError, KeyError, ValueError):
        raise CliError(EXIT_PARSE, 'g file must be a list of {"n": [...], "g": int}') from None


def hyper_report(N: int, n: int, q, weights=None, max_level: int = 40) -> dict:
    pres = aq_presentation(N, n, q, max_level)
    p34 = prop34_checks(N, n, q, weights, pres)
    gc = givental_compare(N, n, q, pres)
    return {
        "N": N,
        "n": n,
        "q_mode": q_mode(q),
        "delta_star_size": len(delta_star(N, n, weights)),
        "dimension": pres.dim,
        "minpoly_T": _poly_json(pres.minpolys["T"]),
        "prop34": [{"check": c, "ok": ok, "detail": str(d)} for c, ok, d in p34.checks],
        "givental_compare": {
            "verdict": gc["verdict"],
            "t_power": gc["t_power"],
            "cofactor": _poly_json(gc["cofactor"]),
            "relation": _poly_json(gc["relation"]),
            "suggested": _poly_json(gc["suggested"]),
            "note": "exploratory; no claim is made",
        },
        "ok": p34.ok,
        "schema_version": SCHEMA_VERSION,
    }


def cmd_hyper(args) -> int:
    try:
        rep = hyper_report(args.n_dim, args.deg, parse_q(args.q), _load_weights(args.g), args.max_level)
    except FanoGuardError as e:
        raise CliError(EXIT_GUARD, str(e)) from None
    except QuotientUnstable as e:
        raise CliError(EXIT_UNSTABLE, str(e), {"trajectory": [list(t) for t in e.trajectory]}) from None
    if args.experimental:
        rep["experimental"] = experimental_dims(args.n_dim, args.deg, parse_q(args.q))
    _emit(rep, args.output)
    return EXIT_OK if rep["ok"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# golden files
# ---------------------------------------------------------------------------

GOLDEN_JOBS = {
    "pn_symbolic": [("qh", f"pn:{N}", "symbolic") for N in range(1, 5)],
    "pn_q0": [("qh", f"pn:{N}", "0") for N in range(1, 5)],
    "pn_q2": [("qh", f"pn:{N}", "2") for N in range(1, 5)],
    "hypersurface": [("hyper", (N, n), "symbolic") for N, n in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)]]
    + [("hyper", (3, 2), "1"), ("hyper", (3, 1), "1")],
    "lemma26": [("lemma26", 3, "1")],
}


def golden_payload(name: str) -> list:
    out = []
    for kind, arg, qtext in GOLDEN_JOBS[name]:
        q = parse_q(qtext)
        if kind == "qh":
            fan, phi = builtin_fan(arg)
            out.append({"input": f"{arg} q={qtext}", "report": compute_ring(fan, phi, q)})
        elif kind == "hyper":
            out.append({"input": f"N={arg[0]} n={arg[1]} q={qtext}", "report": hyper_report(*arg, q)})
        else:
            out.append({"input": f"N={arg}", "report": fock_report(arg, ["lemma26"], q)})
    return out


def golden_dir() -> Path:
    return Path(str(resources.files("toricqh") / "golden"))


def cmd_golden(args) -> int:
    names = args.name or list(GOLDEN_JOBS)
    diffs = []
    for name in names:
        text = dumps(golden_payload(name))
        if args.write:
            Path(args.write, f"{name}.json").write_text(text)
            continue
        stored = (golden_dir() / f"{name}.json").read_text()
        if stored != text:
            diffs.append(name)
    _emit({"golden": names, "mismatched": diffs, "ok": not diffs}, None)
    return EXIT_CHECK if diffs else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toricqh", description="Quantum cohomology of toric varieties via lattice vertex algebras.")
    sub = p.add_subparsers(dest="cmd", required=True)

    qh = sub.add_parser("qh", help="quotient ring of a deformed semigroup ring")
    src = qh.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", help="pn:N or prod:a,b")
    src.add_argument("--fan", help="fan JSON file")
    qh.add_argument("--q", default="symbolic", help="'symbolic', a rational, or a comma list")
    qh.add_argument("--max-level", type=int, default=40)
    qh.add_argument("--output", "-o")
    qh.add_argument("--timing", action="store_true", help="record wall-clock seconds")
    qh.set_defaults(func=cmd_qh)

    fk = sub.add_parser("fock", help="operator identities in the lattice vertex algebra")
    fk.add_argument("--n", type=int, required=True, help="dimension of projective space")
    fk.add_argument("--weight", type=int, default=2)
    fk.add_argument("--check", action="append", choices=FOCK_CHECKS)
    fk.add_argument("--q", default="1")
    fk.add_argument("--stride", type=int, default=7, help="keep every k-th sampled monomial")
    fk.add_argument("--output", "-o")
    fk.set_defaults(func=cmd_fock)

    hy = sub.add_parser("hyper", help="degree-n hypersurface in projective space")
    hy.add_argument("--n-dim", type=int, required=True)
    hy.add_argument("--deg", type=int, required=True)
    hy.add_argument("--q", default="symbolic")
    hy.add_argument("--g", help='weights file: [{"n": [...], "g": int}, ...]')
    hy.add_argument("--max-level", type=int, default=40)
    hy.add_argument("--experimental", action="store_true", help="add truncated rank data for D + K_g")
    hy.add_argument("--output", "-o")
    hy.set_defaults(func=cmd_hyper)

    gd = sub.add_parser("golden", help="recompute the stored reference reports and diff them")
    gd.add_argument("--name", action="append", choices=sorted(GOLDEN_JOBS))
    gd.add_argument("--write", metavar="DIR", help="write fresh files instead of diffing")
    gd.set_defaults(func=cmd_golden)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK
    try:
        code = args.func(args)
    except CliError as e:
        print(f"toricqh: {e}", file=sys.stderr)
        if e.payload:
            sys.stdout.write(dumps({"error": str(e), **e.payload, "schema_version": SCHEMA_VERSION}))
        return e.code
    return code
