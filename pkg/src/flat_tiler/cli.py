"""flat-tiler solve|tile|verify: run the pipeline on a JSON complex and certify the result.

Exit codes: 0 success, 2 malformed input or mode/connectivity mismatch,
3 degenerate values, 4 solver failure, 5 an identity residual above tolerance.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import certify
from .documents import (field_to_dict, read_document, surface_from_dict, surface_to_dict,
                        write_document)
from .errors import (ConsistencyFailure, DegenerateValues, MalformedInput, NotApplicable, NotFound,
                     SolverFailure)
from .network import complex_from_dict, require_valid
from .solver import solve
from .tiler import resolve_mode, tile

EXIT_OK, EXIT_MALFORMED, EXIT_DEGENERATE, EXIT_SOLVER, EXIT_IDENTITY = 0, 2, 3, 4, 5


class _Exit(Exception):
    def __init__(self, code):
        self.code = code


def _load_input(path):
    return require_valid(complex_from_dict(read_document(path)))


def _default_out(path, suffix):
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _print_report(report, out):
    for line in report.lines():
        print(line, file=out)


def _fail_on_residuals(report, err):
    if report.ok:
        return
    for r in report.failures:
        where = f" at {r.where}" if r.where else ""
        print(f"identity violated: {r.identity}{where} (residual {r.value:.3e} > {r.tol:.3e})", file=err)
    raise _Exit(EXIT_IDENTITY)


def _degenerate(exc, err):
    print(f"degenerate values: {exc}", file=err)
    print("vertices: " + " ".join(str(v) for v in exc.vertices), file=err)
    if exc.edges:
        print("edges: " + " ".join(str(e) for e in exc.edges), file=err)
    raise _Exit(EXIT_DEGENERATE)


def _solve_stage(report, cx, tol):
    with report.stage("solve"):
        field = solve(cx)
    report.facts["solver"] = field.solve_stats.get("method")
    with report.stage("field checks"):
        fluxes = certify.field_checks(report, field, cx, tol)
    return field, fluxes


def cmd_solve(args, out, err):
    tol = certify.tolerance_from_env()
    report = certify.RunReport()
    with report.stage("load"):
        cx = _load_input(args.input)
    field, fluxes = _solve_stage(report, cx, tol)
    path = args.out or _default_out(args.input, ".field.json")
    write_document(field_to_dict(field, cx, fluxes), path)
    report.facts["field document"] = str(path)
    degenerate = None
    try:
        with report.stage("index scan"):
            certify.index_checks(report, field, cx)
    except DegenerateValues as exc:
        if not args.allow_flat_edges:
            degenerate = exc
    _print_report(report, out)
    if degenerate is not None:
        _degenerate(degenerate, err)
    _fail_on_residuals(report, err)
    return EXIT_OK


def cmd_tile(args, out, err):
    tol = certify.tolerance_from_env()
    report = certify.RunReport()
    with report.stage("load"):
        cx = _load_input(args.input)
    resolve_mode(args.mode, cx.m)
    field, fluxes = _solve_stage(report, cx, tol)
    index_report = None
    try:
        with report.stage("index scan"):
            index_report = certify.index_checks(report, field, cx)
    except DegenerateValues as exc:
        if not (args.allow_flat_edges and cx.m == 2):
            _print_report(report, out)
            _degenerate(exc, err)
    try:
        with report.stage("tile"):
            surface = tile(cx, field, mode=args.mode, allow_flat_edges=args.allow_flat_edges)
    except (ConsistencyFailure, NotFound) as exc:
        _print_report(report, out)
        name = "consistent gluing" if isinstance(exc, ConsistencyFailure) else "enclosing singular curve exists"
        print(f"identity violated: {name} ({exc})", file=err)
        raise _Exit(EXIT_IDENTITY)
    with report.stage("verify"):
        certify.surface_checks(report, surface, field, cx, tol, fluxes, index_report)
    _print_report(report, out)
    _fail_on_residuals(report, err)
    path = args.out or _default_out(args.input, ".surface.json")
    write_document(surface_to_dict(surface), path)
    print(f"surface document: {path}", file=out)
    if args.svg:
        from .svg import write_svgs
        for p in write_svgs(args.svg, surface, cx, field, args.samples):
            print(f"svg: {p}", file=out)
    return EXIT_OK


def cmd_verify(args, out, err):
    tol = certify.tolerance_from_env()
    report = certify.RunReport()
    with report.stage("load"):
        surface = surface_from_dict(read_document(args.surface))
        cx = _load_input(args.input)
    field, fluxes = _solve_stage(report, cx, tol)
    index_report = None
    if cx.m > 2:
        try:
            index_report = certify.index_checks(report, field, cx)
        except DegenerateValues as exc:
            _print_report(report, out)
            _degenerate(exc, err)
    with report.stage("verify"):
        certify.surface_checks(report, surface, field, cx, tol, fluxes, index_report)
    _print_report(report, out)
    _fail_on_residuals(report, err)
    print("all identities hold", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flat-tiler", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve the Dirichlet problem and write the field document")
    p.add_argument("input")
    p.add_argument("--out", help="field document path (default: <input stem>.field.json)")
    p.add_argument("--allow-flat-edges", action="store_true")
    p.set_defaults(run=cmd_solve)
    p = sub.add_parser("tile", help="tile the flat surface and write the surface document")
    p.add_argument("input")
    p.add_argument("--mode", choices=["annulus", "pants", "ladder", "auto"], default="auto")
    p.add_argument("--allow-flat-edges", action="store_true")
    p.add_argument("--svg", metavar="DIR", help="write one SVG per cylinder plus levels.svg")
    p.add_argument("--samples", type=int, default=9, help="regular level samples drawn in levels.svg")
    p.add_argument("--out", help="surface document path (default: <input stem>.surface.json)")
    p.set_defaults(run=cmd_tile)
    p = sub.add_parser("verify", help="re-check a stored surface against its input complex")
    p.add_argument("surface")
    p.add_argument("input")
    p.set_defaults(run=cmd_verify)
    return ap


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        return args.run(args, out, err)
    except _Exit as e:
        return e.code
    except NotApplicable as exc:
        print(f"error: {exc}", file=err)
        return EXIT_MALFORMED
    except MalformedInput as exc:
        print(f"malformed input: {exc}", file=err)
        return EXIT_MALFORMED
    except DegenerateValues as exc:
        try:
            _degenerate(exc, err)
        except _Exit as e:
            return e.code
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=err)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
