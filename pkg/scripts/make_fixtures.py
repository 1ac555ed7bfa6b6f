"""Write the named fixture complexes to data/ as input documents."""

import argparse
from pathlib import Path

from flat_tiler.fixtures import (four_hole_fixture, monkey_saddle_fixture, pants_fixture, ring_annulus,
                                 three_hole_fixture)
from flat_tiler.network import dump_complex

FIXTURES = {
    "annulus_a8.json": lambda: ring_annulus(8, 1.0),
    "annulus_a16_k2.5.json": lambda: ring_annulus(16, 2.5),
    "annulus_a8_radial2.json": lambda: ring_annulus(8, 1.0, radial_c=2.0),
    "pants_p.json": pants_fixture,
    "three_holes.json": three_hole_fixture,
    "four_holes.json": four_hole_fixture,
    "monkey_saddle.json": monkey_saddle_fixture,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, make in FIXTURES.items():
        cx = make()
        dump_complex(cx, out / name)
        print(f"{name}: V={cx.n_vertices} E={cx.n_edges} m={cx.m}")


if __name__ == "__main__":
    main()
