"""Command-line front end.

Every subcommand prints (or writes) a JSON report with sorted keys, exact
rationals as "num/den" strings, the seed, and an ``anchor`` naming the
statement the computation checks.  Exit codes: 0 ok, 1 usage or parse
error, 2 computational bound exceeded, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .combinatorics import (
    WindowedSet,
    appendix_necessity_check,
    bogolyubov_min_k,
    bohr_set,
    grid_set,
    interval_set,
    pinned_delta_refuter,
    product_set,
    volspec,
    volspec_coverage,
)
from .errors import BoundExceeded, InvariantViolation
from .expsum import hua_threshold, psi_table
from .intlinalg import (
    coefficient_block,
    multiplicative_complexity_bound,
    smallest_factor_counterexample,
    smith_normal_form,
)
from .intpoly import IntPolynomialMap
from .spectral import (
    CyclicProductSystem,
    GroupSet,
    TOL,
    NoExpansiveDirection,
    find_expansive_direction,
    increment_run,
)
from .valueset import (
    NoCoprimeLevel,
    build_counterexample,
    find_deficient_primes,
    max_progression_length,
    return_time_set,
    value_set_mod_prime,
    value_set_mod_squarefree,
)

SCHEMA = "expansivity-report/1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def _ints(text: str, sep: str = ",") -> List[int]:
    return [int(x) for x in text.split(sep) if x.strip()]


# set specifications ----------------------------------------------------------


def parse_windowed_set(spec: str, poly: Optional[IntPolynomialMap] = None) -> WindowedSet:
    """Integer sets for the combinatorial commands.

    ``pts:0;1;4`` or ``pts:0,0;1,0`` (window = bounding box),
    ``grid:LO:HI[,LO:HI...]``, ``ap:LO:HI:STEP[:OFFSET]``,
    ``bohr:ALPHA:EPS:LO:HI[:DIM]``, ``blueprint:DEPTH`` (return times of
    the counterexample for --poly over one period), ``file:PATH``.
    """
    kind, _, body = spec.partition(":")
    if kind == "pts":
        pts = [tuple(_ints(p)) for p in body.split(";") if p.strip()]
        if not pts:
            raise ValueError("empty point list")
        arr = np.array(pts)
        return WindowedSet.from_points(pts, arr.min(axis=0), arr.max(axis=0) + 1)
    if kind == "grid":
        bounds = [tuple(_ints(b, ":")) for b in body.split(",")]
        return grid_set([b[0] for b in bounds], [b[1] for b in bounds])
    if kind == "ap":
        parts = _ints(body, ":")
        return interval_set(*parts)
    if kind == "bohr":
        parts = body.split(":")
        alpha, eps, lo, hi = _frac(parts[0]), _frac(parts[1]), int(parts[2]), int(parts[3])
        dim = int(parts[4]) if len(parts) > 4 else 1
        base = bohr_set(alpha, eps, (lo, hi))
        return base if dim == 1 else product_set([base] * dim)
    if kind == "blueprint":
        if poly is None:
            raise ValueError("blueprint sets need --poly")
        return return_time_set(build_counterexample(poly, int(body)))
    if kind == "file":
        with open(body) as fh:
            return WindowedSet.from_json(json.load(fh))
    raise ValueError(f"unknown set specification {spec!r}")


def parse_system(moduli: str, gens: Optional[str], dim: Optional[int]) -> CyclicProductSystem:
    q = _ints(moduli)
    if gens:
        return CyclicProductSystem(tuple(q), tuple(tuple(_ints(g)) for g in gens.split(";")))
    if dim is not None and dim > 1:
        if len(q) == 1:
            return CyclicProductSystem.standard(q[0], dim)
        if len(q) != dim:
            raise ValueError("--dim needs one modulus or one per axis")
        return CyclicProductSystem(tuple(q), tuple(tuple(int(i == t) for i in range(dim)) for t in range(dim)))
    return CyclicProductSystem.diagonal(q)


def parse_group_set(spec: str, system: CyclicProductSystem, seed: int) -> GroupSet:
    """``0;2`` points (comma-separated per level), ``random:DENSITY``,
    ``product:1,2|0,3`` (one residue list per level), ``full``."""
    kind, _, body = spec.partition(":")
    if kind == "random":
        return GroupSet.random(system, np.random.default_rng(seed), float(body or 0.5))
    if kind == "product":
        return GroupSet.product(system.moduli, [_ints(f) for f in body.split("|")])
    if kind == "full":
        return GroupSet.full(system)
    return GroupSet.from_points(system, [tuple(_ints(p)) for p in spec.split(";") if p.strip()])


# commands --------------------------------------------------------------------


def cmd_value_set(args):
    P = IntPolynomialMap.parse(args.poly)
    if args.prime is not None:
        vs = value_set_mod_prime(P, args.prime)
    else:
        vs = value_set_mod_squarefree(P, args.modulus)
    return "polynomial value sets modulo primes and squarefree moduli", {"value_set": vs.to_json(), "density": str(vs.density)}


def cmd_deficient_primes(args):
    P = IntPolynomialMap.parse(args.poly)
    lam, primes = find_deficient_primes(P, args.count, args.scan_bound)
    sizes = [len(value_set_mod_prime(P, p)) for p in primes]
    return "deficient primes with |V(P,p)| <= (1 - 1/(2 deg P)) p", {
        "lambda": str(lam),
        "primes": primes,
        "value_set_sizes": sizes,
    }


def _mk_table(bp, kmax: int):
    rows = []
    for k in range(1, kmax + 1):
        try:
            rows.append(max_progression_length(bp, k).to_json())
        except NoCoprimeLevel as exc:
            rows.append({"k": k, "level": None, "m": None, "error": str(exc)})
    return rows


def cmd_counterexample(args):
    P = IntPolynomialMap.parse(args.poly)
    bp = build_counterexample(P, args.depth)
    return "counterexample system with no polynomial return to zero", {
        "blueprint": bp.to_json(),
        "density": str(bp.density),
        "m_k": _mk_table(bp, args.kmax),
    }


def cmd_pinned_refute(args):
    P = IntPolynomialMap.parse(args.poly)
    bp = build_counterexample(P, args.depth)
    x = tuple(_ints(args.x)) if args.x else None
    E = return_time_set(bp, x)
    bound = max_progression_length(bp, args.k)
    m = bound.m if args.m is None else args.m
    cert = pinned_delta_refuter(E, P, args.k, m, modulus=args.modulus)
    return "pinned progressions {k, ..., mk} fail in the return-time set", {
        "moduli": list(bp.moduli),
        "base_point": list(x or tuple(min(a) for a in bp.sets)),
        "return_time_density": str(E.density),
        "level_bound": bound.to_json(),
        "certificate": cert.to_json(),
    }


def cmd_bogolyubov(args):
    P = IntPolynomialMap.parse(args.poly)
    if args.degenerate_a is not None:
        rep = appendix_necessity_check(
            P, _frac(args.degenerate_a), _frac(args.eps), (args.lo, args.hi), args.kmax, args.radius
        )
        return "degenerate maps: coverage blocked by a Bohr set", rep.to_json()
    if not args.set:
        raise ValueError("bogolyubov needs --set or --degenerate-a")
    E = parse_windowed_set(args.set, P)
    rep = bogolyubov_min_k(E, P, args.kmax, args.radius)
    return "k Z^d inside E - E + P(E - E) on a window", {"set_size": E.size, "density": str(E.density), **rep.to_json()}


def cmd_volspec(args):
    E = parse_windowed_set(args.set)
    spec = volspec(E)
    return "simplex volume spectrum contains k Z", {
        "set_size": E.size,
        "k": args.k,
        "bound": args.bound,
        "covered": volspec_coverage(E, args.k, args.bound, spec),
        "scaled_volumes_min": min(spec) if spec else None,
        "scaled_volumes_max": max(spec) if spec else None,
        "distinct_scaled_volumes": len(spec),
    }


def cmd_increment(args):
    P = IntPolynomialMap.parse(args.poly) if args.poly else None
    if args.set.startswith("blueprint:"):
        if P is None:
            raise ValueError("blueprint sets need --poly")
        bp = build_counterexample(P, int(args.set.partition(":")[2]))
        system = CyclicProductSystem.diagonal(bp.moduli)
        A = GroupSet.product(bp.moduli, bp.sets)
    else:
        if not args.moduli:
            raise ValueError("--moduli is required unless the set is a blueprint")
        system = parse_system(args.moduli, args.gens, args.dim)
        A = parse_group_set(args.set, system, args.seed)
    trace = increment_run(system, A, args.eps, mode=args.mode, P=P, max_steps=args.max_steps)
    return "measure increment on ergodic components", {
        "system": system.to_json(),
        "mu_A": str(A.measure),
        "trace": trace.to_json(),
    }


def cmd_direction(args):
    system = parse_system(args.moduli, args.gens, args.dim)
    A = parse_group_set(args.set, system, args.seed)
    try:
        res = find_expansive_direction(system, A, args.gamma, args.mcap).to_json()
        res["found"] = True
    except NoExpansiveDirection as exc:
        res = {"found": False, "best": exc.best, "message": str(exc)}
    return "expansive direction from a haystack", {"system": system.to_json(), "mu_A": str(A.measure), **res}


def cmd_weyl(args):
    P = IntPolynomialMap.parse(args.poly)
    table = psi_table(P, args.qmax)
    out = {"psi": [{"q": q, "psi": v} for q, v in table]}
    if args.target is not None:
        out["threshold"] = {
            "target": args.target,
            "scan_bound": args.qmax,
            "M": hua_threshold(P, args.target, args.qmax),
            "kind": "empirical",
        }
    return "decay of polynomial Weyl averages at rational frequencies", out


def cmd_snf(args):
    if args.matrix:
        B = [_ints(r) for r in args.matrix.split(";")]
        return "Smith normal form", {"matrix": B, "decomposition": smith_normal_form(B).to_json()}
    P = IntPolynomialMap.parse(args.poly)
    B = coefficient_block(P)
    snf = smith_normal_form(B)
    Q = multiplicative_complexity_bound(P, trials=args.trials, seed=args.seed)
    ce = smallest_factor_counterexample(P)
    return "multiplicative complexity from invariant factors", {
        "coefficient_block": B,
        "decomposition": snf.to_json(),
        "Q": Q,
        "Q_rule": "largest invariant factor",
        "smallest_factor_counterexample": None
        if ce is None
        else {"a": ce[0], "q": ce[1], "gcd": ce[2], "smallest_factor": ce[3]},
    }


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="expansivity", description="Desk-scale checks for polynomial recurrence in finite rotations.")
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("value-set", parents=[common])
    s.add_argument("--poly", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--prime", type=int)
    g.add_argument("--modulus", type=int, help="squarefree modulus")
    s.set_defaults(func=cmd_value_set)

    s = sub.add_parser("deficient-primes", parents=[common])
    s.add_argument("--poly", required=True)
    s.add_argument("--count", type=int, default=3)
    s.add_argument("--scan-bound", type=int, default=10**4)
    s.set_defaults(func=cmd_deficient_primes)

    s = sub.add_parser("counterexample", parents=[common])
    s.add_argument("--poly", required=True)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--kmax", type=int, default=10)
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("pinned-refute", parents=[common])
    s.add_argument("--poly", required=True)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--m", type=int, help="pattern length (default: the level bound m_k)")
    s.add_argument("--modulus", type=int, help="work modulo this divisor of the period")
    s.add_argument("--x", help="base point, one residue per level")
    s.set_defaults(func=cmd_pinned_refute)

    s = sub.add_parser("bogolyubov", parents=[common])
    s.add_argument("--poly", required=True)
    s.add_argument("--set", help="set specification (pts:, grid:, ap:, bohr:, blueprint:, file:)")
    s.add_argument("--kmax", type=int, default=10)
    s.add_argument("--radius", type=int, default=4)
    s.add_argument("--degenerate-a", help="rational a for the Bohr-set obstruction check")
    s.add_argument("--eps", default="1/20")
    s.add_argument("--lo", type=int, default=0)
    s.add_argument("--hi", type=int, default=50)
    s.set_defaults(func=cmd_bogolyubov)

    s = sub.add_parser("volspec", parents=[common])
    s.add_argument("--set", required=True)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--bound", type=int, default=5)
    s.set_defaults(func=cmd_volspec)

    s = sub.add_parser("increment", parents=[common])
    s.add_argument("--moduli")
    s.add_argument("--gens", help="generators, ';'-separated, residues ','-separated")
    s.add_argument("--dim", type=int)
    s.add_argument("--set", required=True, help="points '0;2', random:D, product:..|.., full, blueprint:DEPTH")
    s.add_argument("--poly")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--mode", choices=["polynomial", "directional"], default="polynomial")
    s.add_argument("--max-steps", type=int, default=64)
    s.set_defaults(func=cmd_increment)

    s = sub.add_parser("direction", parents=[common])
    s.add_argument("--moduli", required=True)
    s.add_argument("--gens")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--set", required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--mcap", type=int, default=10**4)
    s.set_defaults(func=cmd_direction)

    s = sub.add_parser("weyl", parents=[common])
    s.add_argument("--poly", required=True)
    s.add_argument("--qmax", type=int, default=30)
    s.add_argument("--target", type=float)
    s.set_defaults(func=cmd_weyl)

    s = sub.add_parser("snf", parents=[common])
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--matrix", help="rows ';'-separated, entries ','-separated")
    g.add_argument("--poly")
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(func=cmd_snf)
    return p


def _text(obj, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val and not all(isinstance(x, (int, float, str)) for x in val):
                lines.append(f"{pad}{key}:")
                lines.extend(_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {json.dumps(val, sort_keys=True)}")
    elif isinstance(obj, list):
        for item in obj:
            lines.append(f"{pad}-")
            lines.extend(_text(item, indent + 1))
    else:
        lines.append(f"{pad}{obj}")
    return lines


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        anchor, result = args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except BoundExceeded as exc:
        print(f"bound exceeded: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"INVARIANT VIOLATION: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "format", "output")}
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "inputs": inputs,
        "seed": args.seed,
        "anchor": anchor,
        # exact values are "num/den" strings; floats are good to this absolute tolerance
        "float_tolerance": TOL,
        "result": result,
    }
    if args.format == "json":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        text = "\n".join(_text(report)) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
