"""Time solve, tile and verify on annuli of growing size."""

import argparse
import time

from flat_tiler.fixtures import large_annulus
from flat_tiler.solver import solve
from flat_tiler.tiler import tile_annulus, verify_tiling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[90, 180, 360, 500])
    args = ap.parse_args()
    print(f"{'n_outer':>7} {'V':>7} {'solve':>7} {'tile':>7} {'verify':>7} {'rects':>7}  certified")
    for n in args.sizes:
        cx = large_annulus(n)
        t0 = time.perf_counter()
        f = solve(cx)
        t1 = time.perf_counter()
        cyl = tile_annulus(cx, f)
        t2 = time.perf_counter()
        rep = verify_tiling(cyl)
        t3 = time.perf_counter()
        print(f"{n:7d} {cx.n_vertices:7d} {t1 - t0:7.2f} {t2 - t1:7.2f} {t3 - t2:7.2f} {len(cyl.rects):7d}  {rep.ok()}")


if __name__ == "__main__":
    main()
