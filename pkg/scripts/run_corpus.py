"""Solve, tile and certify the generated corpus; print one row per complex."""

import argparse
import time

from flat_tiler.certify import RunReport, field_checks, index_checks, surface_checks
from flat_tiler.fixtures import random_corpus
from flat_tiler.solver import solve
from flat_tiler.tiler import tile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=52)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    t0 = time.perf_counter()
    cxs = random_corpus(args.count, args.seed)
    print(f"generated {len(cxs)} complexes in {time.perf_counter() - t0:.1f} s")
    print(f"{'#':>3} {'V':>5} {'m':>2} {'energy':>12} {'cyl':>4} {'sing':>4} {'worst':>9}  status")
    failed = 0
    for i, cx in enumerate(cxs):
        rep = RunReport()
        f = solve(cx)
        fl = field_checks(rep, f, cx, args.tol)
        idx = index_checks(rep, f, cx)
        S = tile(cx, f)
        surface_checks(rep, S, f, cx, args.tol, fl, idx)
        worst = max((r.value for r in rep.residuals), default=0.0)
        failed += not rep.ok
        print(f"{i:3d} {cx.n_vertices:5d} {cx.m:2d} {rep.facts['energy']:12.6g} {len(S.cylinders):4d} "
              f"{len(S.singular_points):4d} {worst:9.2e}  {'ok' if rep.ok else 'FAILED'}")
    print(f"{len(cxs) - failed}/{len(cxs)} certified, {time.perf_counter() - t0:.1f} s total")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
