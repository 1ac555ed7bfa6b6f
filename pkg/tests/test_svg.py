import xml.etree.ElementTree as ET

import pytest

from flat_tiler.svg import cylinder_svg, mesh_svg, write_svgs
from flat_tiler.tiler import Cylinder, Rect, surface_from_cylinder, tile, tile_annulus

from conftest import named

NS = "{http://www.w3.org/2000/svg}"


def tiles(svg):
    root = ET.fromstring(svg)
    return [r for r in root.iter(NS + "rect") if r.find(NS + "title") is not None]


def test_a8_two_rows_of_squares(a8):
    cx, f = a8
    svg = cylinder_svg(tile_annulus(cx, f, allow_flat_edges=True))
    rs = tiles(svg)
    assert len(rs) == 16
    rows = sorted({float(r.get("y")) for r in rs})
    assert len(rows) == 2
    for r in rs:
        assert float(r.get("width")) == pytest.approx(float(r.get("height")), rel=1e-5)
    assert 'stroke-dasharray' in svg          # the seam


def test_wraparound_rect_is_drawn_twice():
    rects = [Rect(0, 0, 1, 2.5, 0.0, 1.0, 1.0, 1.0), Rect(1, 2, 3, 0.5, 0.0, 2.0, 1.0, 2.0)]
    svg = cylinder_svg(Cylinder(0, 3.0, 1.0, 1.0, 0.0, "t", "b", rects))
    xs = sorted(float(r.get("x")) for r in tiles(svg) if r.find(NS + "title").text == "edge 0")
    assert len(xs) == 2 and xs[0] < 20.0      # one copy shifted left of the band start
    assert "clip-path" in svg


def test_singular_point_highlighted(pants):
    cx, f = pants
    S = tile(cx, f)
    svg = cylinder_svg(S.cylinders[0], S.singular_points)
    circles = list(ET.fromstring(svg).iter(NS + "circle"))
    assert len(circles) == 2                  # the two identified copies on the root bottom


def test_mesh_svg_draws_critical_and_sampled_levels(pants):
    cx, f = pants
    svg = mesh_svg(cx, f, samples=5)
    polys = list(ET.fromstring(svg).iter(NS + "polygon"))
    crimson = [p for p in polys if p.get("stroke") == "crimson"]
    blue = [p for p in polys if p.get("stroke") == "steelblue"]
    assert len(crimson) == 2                  # the figure eight
    assert len(blue) >= 5


def test_write_svgs(tmp_path, pants):
    cx, f = pants
    S = tile(cx, f)
    paths = write_svgs(tmp_path, S, cx, f)
    assert sorted(p.name for p in paths) == ["cylinder_0.svg", "cylinder_1.svg", "cylinder_2.svg", "levels.svg"]
    for p in paths:
        ET.parse(p)
