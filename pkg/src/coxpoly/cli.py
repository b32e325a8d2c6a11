"""Command-line front end.

Exit codes: 0 success, 1 negative verdict (REJECT / NONE / impossible),
2 usage error, 3 resource or precision error.  The environment variable
COXETER_TOL overrides the default numeric tolerance (discouraged).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

from .diagram import (
    DEFAULT_TOL,
    DiagramError,
    ParseError,
    parse_diagram,
    parse_dimension,
    serialize_diagram,
)
from .classify import DiagramClass, classify, elliptic_type
from .polytope import (
    NoSeedError,
    PolytopeRecord,
    PrecisionError,
    solve_dotted,
)
from .bounds import BoundsError, compute_bounds, refine_k_bound
from .enumerate import EnumConfig, EnumerateError, ResourceCapError, enumerate_P
from .essential import (
    CatalogError,
    EssentialError,
    double,
    find_dissections,
    load_catalog,
    subgroup_filter,
    volume,
)
from ._canon import canonical_key
from . import __version__

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _tolerance() -> float:
    raw = os.environ.get("COXETER_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise SystemExit(
            f"coxpoly: invalid COXETER_TOL value {raw!r}"
        ) from exc
    if tol <= 0:
        raise SystemExit("coxpoly: COXETER_TOL must be positive")
    return tol


def _load(path: str, need_dim, explicit_dim=None):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    dia = parse_diagram(text)
    d = explicit_dim if explicit_dim is not None else parse_dimension(text)
    if need_dim and d is None:
        raise ParseError(f"{path}: no dimension given (use --dim or a dim line)")
    return dia, d


def _fmt(value: float) -> str:
    return f"{value:.12g}"


# -- subcommand handlers -----------------------------------------------


def _cmd_classify(args, tol):
    dia, _ = _load(args.file, need_dim=False)
    cls = classify(dia, tol)
    print(f"class {cls.value}")
    if cls is DiagramClass.ELLIPTIC:
        print(f"type {elliptic_type(dia, tol)}")
    return EXIT_OK


def _cmd_check(args, tol):
    dia, d = _load(args.file, need_dim=True, explicit_dim=args.dim)
    result = solve_dotted(dia, d, tol)
    if isinstance(result, PolytopeRecord):
        print("ACCEPT")
        solved = result.diagram
        index = {v: i + 1 for i, v in enumerate(solved.nodes)}
        for (i, j) in sorted(
            solved.dotted_edges(), key=lambda e: (index[e[0]], index[e[1]])
        ):
            w = solved.label(i, j).w
            print(f"edge {index[i]} {index[j]} dotted w={_fmt(w)}")
        return EXIT_OK
    print(f"REJECT {result}")
    return EXIT_NEGATIVE


def _cmd_enumerate(args, tol):
    config = EnumConfig(
        d=args.dim,
        k_max=args.max_mult,
        n_max=args.max_facets,
        jobs=args.jobs,
        limit_entries=args.limit_entries,
        tol=tol,
    )
    t0 = time.time()
    records = enumerate_P(config)
    os.makedirs(args.out, exist_ok=True)
    manifest = [
        f"# coxpoly {__version__}",
        f"# config dim={args.dim} max-mult={args.max_mult} "
        f"max-facets={args.max_facets}",
    ]
    for idx, rec in enumerate(records, start=1):
        name = f"polytope-{idx:03d}.cox"
        text = serialize_diagram(
            rec.diagram,
            dim=rec.dimension,
            header=(f"name: polytope-{idx:03d}", "family: enumerated"),
        )
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        digest = hashlib.sha256(text.encode()).hexdigest()[:16]
        manifest.append(
            f"{name} facets={rec.facet_count} dotted={rec.dotted_count} "
            f"sha256={digest}"
        )
    manifest.append(f"# wall-time {time.time() - t0:.1f}s")
    with open(os.path.join(args.out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(f"polytopes {len(records)}")
    print(f"out {args.out}")
    return EXIT_OK


def _cmd_bounds(args, tol):
    if args.k is not None:
        bounds = compute_bounds(args.dim, args.k)
        for key, value in bounds.lines():
            print(f"{key:<14} {value}")
    if args.refine:
        if args.cap is None:
            raise BoundsError("--refine requires --cap")
        result = refine_k_bound(
            args.dim, args.cap, shape=args.shape, tol=tol, jobs=args.jobs
        )
        print(f"{'k0':<14} {result.max_label}")
        print(f"{'k0-provenance':<14} search")
        print(f"{'cap':<14} {result.cap}")
        print(f"{'cap-reached':<14} {'yes' if result.cap_reached else 'no'}")
        print(f"{'witnesses':<14} {len(result.witnesses)}")
    elif args.k is None:
        raise BoundsError("nothing to do: give --k and/or --refine --cap")
    return EXIT_OK


def _require_record(dia, d, tol, path):
    result = solve_dotted(dia, d, tol)
    if not isinstance(result, PolytopeRecord):
        print(f"REJECT {result}")
        raise _Negative()
    return result


class _Negative(Exception):
    pass


def _cmd_dissect(args, tol):
    dia, d = _load(args.file, need_dim=True, explicit_dim=args.dim)
    record = _require_record(dia, d, tol, args.file)
    witnesses = find_dissections(record, tol)
    if not witnesses:
        print("NONE")
        return EXIT_NEGATIVE
    for w in witnesses:
        if w.kind == "angle-split":
            f1, f2, m, a, b = w.split
            print(f"witness angle-split pi/{m} -> pi/{a} + pi/{b}")
        else:
            print("witness orthogonal")
        for part in w.parts:
            line = serialize_diagram(part.diagram).replace("\n", "; ")
            print(f"  part {line}")
    return EXIT_OK


def _cmd_double(args, tol):
    dia, d = _load(args.file, need_dim=True, explicit_dim=args.dim)
    record = _require_record(dia, d, tol, args.file)
    index = {i + 1: v for i, v in enumerate(record.diagram.nodes)}
    if args.facet not in index:
        raise DiagramError(f"facet index {args.facet} out of range")
    result = double(record, index[args.facet], tol)
    if isinstance(result, PolytopeRecord):
        print("ACCEPT")
        sys.stdout.write(serialize_diagram(result.diagram, dim=d))
        return EXIT_OK
    print(f"REJECT {result}")
    return EXIT_NEGATIVE


def _cmd_volume(args, tol):
    dia, d = _load(args.file, need_dim=True, explicit_dim=args.dim)
    record = _require_record(dia, d, tol, args.file)
    print(f"volume {_fmt(volume(record, tol))}")
    return EXIT_OK


def _cmd_catalog(args, tol):
    if args.action != "verify":
        raise DiagramError(f"unknown catalog action {args.action!r}")
    entries = load_catalog(args.dir, tol)
    for e in entries:
        print(f"OK {e.filename} name={e.name} family={e.family}")
    print(f"verified {len(entries)}")
    return EXIT_OK


def _cmd_filter(args, tol):
    dia_p, dp = _load(args.sub, need_dim=True)
    dia_f, df = _load(args.sup, need_dim=True)
    rec_p = _require_record(dia_p, dp, tol, args.sub)
    rec_f = _require_record(dia_f, df, tol, args.sup)
    verdict = subgroup_filter(rec_p, rec_f, tol)
    print(str(verdict))
    return EXIT_OK if verdict else EXIT_NEGATIVE


# -- parser ------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coxpoly",
        description="Compact hyperbolic Coxeter polytopes via their diagrams.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a diagram file")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("check", help="verify a polytope diagram")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("file")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("enumerate", help="enumerate polytope diagrams")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--max-mult", type=int, required=True)
    p.add_argument("--max-facets", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--limit-entries", type=int, default=None)
    p.set_defaults(handler=_cmd_enumerate)

    p = sub.add_parser("bounds", help="facet and label bounds")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--shape", choices=("general", "triangle"), default="general")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("dissect", help="search dissecting hyperplanes")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("file")
    p.set_defaults(handler=_cmd_dissect)

    p = sub.add_parser("double", help="double along a facet")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--facet", type=int, required=True)
    p.add_argument("file")
    p.set_defaults(handler=_cmd_double)

    p = sub.add_parser("volume", help="even-dimensional volume")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("file")
    p.set_defaults(handler=_cmd_volume)

    p = sub.add_parser("catalog", help="catalog operations")
    p.add_argument("action", choices=("verify",))
    p.add_argument("dir")
    p.set_defaults(handler=_cmd_catalog)

    p = sub.add_parser("filter", help="finite-index subgroup filter")
    p.add_argument("--sub", required=True, help="candidate subgroup polytope")
    p.add_argument("--sup", required=True, help="candidate supergroup polytope")
    p.set_defaults(handler=_cmd_filter)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _tolerance()
        return args.handler(args, tol)
    except _Negative:
        return EXIT_NEGATIVE
    except (ResourceCapError, PrecisionError, NoSeedError) as exc:
        print(f"coxpoly: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ParseError, BoundsError, EnumerateError, CatalogError) as exc:
        print(f"coxpoly: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DiagramError, EssentialError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"coxpoly: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
