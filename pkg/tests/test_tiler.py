import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flat_tiler import DegenerateValues, NotApplicable
from flat_tiler.fixtures import ring_annulus
from flat_tiler.solver import boundary_fluxes, energy, solve
from flat_tiler.tiler import (Cylinder, Rect, double, surface_from_cylinder, tile, tile_annulus, tile_ladder,
                              tile_pair_of_pants, verify_tiling)

from conftest import corpus, corpus_surfaces, named


def positive(cyl):
    return [r for r in cyl.rects if r.area > 0]


def test_a8_cylinder(a8):
    cx, f = a8
    with pytest.raises(DegenerateValues):
        tile_annulus(cx, f)
    cyl = tile_annulus(cx, f, allow_flat_edges=True)
    assert cyl.circumference == pytest.approx(4.0, abs=1e-12) and cyl.height == 1.0
    rects = positive(cyl)
    assert len(rects) == 16
    for r in rects:
        assert r.width == pytest.approx(0.5, abs=1e-12) and r.height == pytest.approx(0.5, abs=1e-12)
    assert sorted(round(r.y, 12) for r in rects) == [0.0] * 8 + [0.5] * 8
    zero = [r for r in cyl.rects if r.area == 0]
    assert all(r.flat and r.width == 0 and r.height == 0 for r in zero)
    assert cyl.area == pytest.approx(energy(f, cx), abs=1e-12)
    rep = verify_tiling(cyl)
    assert rep.area_residual <= 1e-12 and rep.overlap <= 1e-12 and not rep.gaps


def test_a8_scaled_conductance():
    cx = ring_annulus(8)
    cx4 = cx.with_conductance(cx.conductance * 4)
    c1 = tile_annulus(cx, solve(cx), allow_flat_edges=True)
    c4 = tile_annulus(cx4, solve(cx4), allow_flat_edges=True)
    assert c4.circumference == pytest.approx(4 * c1.circumference, rel=1e-12)
    assert c4.height == c1.height
    w1 = sorted(r.width for r in positive(c1))
    w4 = sorted(r.width for r in positive(c4))
    assert np.allclose(w4, 4 * np.array(w1), rtol=1e-12)


def test_levels_method_agrees(a8):
    cx, f = a8
    cyl = tile_annulus(cx, f, allow_flat_edges=True, method="levels")
    assert cyl.circumference == pytest.approx(4.0, abs=1e-12)
    assert verify_tiling(cyl).ok()
    for cx, f in corpus()[:8:4]:
        a = tile_annulus(cx, f)
        b = tile_annulus(cx, f, method="levels")
        assert a.area == pytest.approx(b.area, rel=1e-9)
        assert verify_tiling(b).ok()


def _hand_cylinder():
    rects = [Rect(0, 0, 1, 0.0, 0.0, 2.0, 1.0, 2.0), Rect(1, 2, 3, 2.0, 0.0, 1.0, 1.0, 1.0),
             Rect(2, 4, 5, 2.5, 1.0, 2.0, 1.0, 2.0), Rect(3, 6, 7, 1.5, 1.0, 1.0, 1.0, 1.0)]
    return Cylinder(0, 3.0, 2.0, 2.0, 0.0, "top", "bottom", rects)


def test_verify_hand_cylinder_with_wraparound():
    rep = verify_tiling(_hand_cylinder())
    assert rep.ok() and rep.area_residual == 0.0 and rep.overlap == 0.0


def test_verify_detects_deleted_rect():
    cyl = _hand_cylinder()
    gone = cyl.rects.pop(1)
    rep = verify_tiling(cyl)
    assert rep.area_residual == pytest.approx(gone.area)
    assert rep.gaps and rep.gaps[0][:2] == (0.0, 1.0)
    assert not rep.ok()


def test_verify_detects_duplicated_rect():
    cyl = _hand_cylinder()
    cyl.rects.append(copy.copy(cyl.rects[2]))
    rep = verify_tiling(cyl)
    assert rep.overlap == pytest.approx(cyl.rects[2].area)
    assert not rep.gaps and not rep.ok()


def test_pants_surface(pants):
    cx, f = pants
    S = tile_pair_of_pants(cx, f)
    assert len(S.cylinders) == 3
    (p,) = S.singular_points
    assert p.index == -1 and p.cone_angle == pytest.approx(4 * math.pi, abs=1e-9)
    fl = boundary_fluxes(f, cx)
    assert S.boundary_lengths["E1"] == pytest.approx(fl[0], rel=1e-9)
    assert S.boundary_lengths["E2^1"] == pytest.approx(-fl[1], rel=1e-9)
    assert S.boundary_lengths["E2^2"] == pytest.approx(-fl[2], rel=1e-9)
    assert all(abs(h - cx.k) <= 1e-12 for h in S.path_heights())
    root = S.cylinders[0]
    assert root.height == pytest.approx(cx.k - f.values[p.vertex], abs=1e-15)
    assert len(root.bottom_quotient) == 1 and len(root.bottom_quotient[0]) == 2   # n + 1 copies of u identified
    assert S.area == pytest.approx(energy(f, cx), rel=1e-9)
    lad = tile_ladder(cx, f)
    assert [c.circumference for c in lad.cylinders] == [c.circumference for c in S.cylinders]


@pytest.mark.parametrize("name,angles", [("three", [4, 4]), ("four", [4, 4, 4]), ("monkey", [6])])
def test_ladder_cone_angles(name, angles):
    cx, f = named(name)
    S = tile_ladder(cx, f)
    got = sorted(p.cone_angle / math.pi for p in S.singular_points)
    assert got == pytest.approx(angles, abs=1e-9)
    for p in S.singular_points:
        n = -p.index
        assert p.cone_angle == pytest.approx(2 * (n + 1) * math.pi, abs=1e-9)
        assert sum(1 for _, side, _ in p.positions if side == "top") == n + 1
    assert sum(-p.index for p in S.singular_points) == cx.m - 2
    assert S.area == pytest.approx(energy(f, cx), rel=1e-9)
    assert all(abs(h - cx.k) <= 1e-12 for h in S.path_heights())
    for c in S.cylinders:
        assert verify_tiling(c).ok()


def test_quotient_length_matches_children():
    cx, f = named("four")
    S = tile_ladder(cx, f)
    for c in S.cylinders:
        if c.children:
            tops = sum(S.cylinders[ch].circumference for ch in c.children)
            assert tops == pytest.approx(c.circumference, rel=1e-9)


def test_split_edges_stack_consistently():
    cx, f = named("three")
    S = tile_ladder(cx, f)
    by_edge = {}
    for c in S.cylinders:
        for r in c.rects:
            by_edge.setdefault(r.edge, []).append(r)
    g = f.values
    for e, rs in by_edge.items():
        a, b = cx.edges[e]
        assert sum(r.height for r in rs) == pytest.approx(abs(g[a] - g[b]), abs=1e-10)
        assert len({round(r.width, 10) for r in rs}) == 1


def test_boundary_rects_touch_boundary():
    cx, f = named("pants")
    S = tile(cx, f)
    outer, inner = set(cx.outer_boundary), {v for c in cx.inner_boundaries for v in c}
    for c in S.cylinders:
        for r in c.rects:
            if r.upper in outer:
                assert c.parent is None and r.y == 0.0
            if r.lower in inner:
                assert not c.children and r.y + r.height == pytest.approx(c.height, abs=1e-12)


def test_tile_dispatch_and_mismatch(pants):
    cx, f = pants
    with pytest.raises(NotApplicable, match="mode/connectivity mismatch"):
        tile(cx, f, mode="annulus")
    a = corpus()[0]
    with pytest.raises(NotApplicable):
        tile(*a, mode="ladder")
    with pytest.raises(NotApplicable):
        tile_annulus(cx, f)
    assert len(tile(*a).cylinders) == 1


def test_double():
    cx = ring_annulus(8)
    f = solve(cx)
    d = double(surface_from_cylinder(tile_annulus(cx, f, allow_flat_edges=True), cx, f))
    assert d.genus == 1 and d.area == pytest.approx(2 * energy(f, cx), abs=1e-12)
    for name, m in (("pants", 3), ("three", 4), ("four", 5)):
        cx, f = named(name)
        S = tile_ladder(cx, f)
        d = double(S)
        assert d.genus == m - 1 and d.area == 2 * S.area
        assert d.area == pytest.approx(2 * energy(f, cx), rel=1e-9)
        assert len(d.singular_points) == 2 * len(S.singular_points)


def test_corpus_tilings_are_certified():
    for (cx, f), S in zip(corpus(), corpus_surfaces()):
        assert abs(S.area - energy(f, cx)) <= 1e-9 * energy(f, cx)
        for c in S.cylinders:
            assert verify_tiling(c).ok(1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(3, 16))
def test_random_ring_annulus_tiles(seed, n):
    rng = np.random.default_rng(seed)
    cx = ring_annulus(n)
    cx = cx.with_conductance(rng.uniform(0.1, 10, cx.n_edges))
    f = solve(cx)
    try:
        cyl = tile_annulus(cx, f)
    except DegenerateValues:
        return
    assert cyl.circumference == pytest.approx(abs(boundary_fluxes(f, cx)[0]), rel=1e-9)
    assert verify_tiling(cyl).ok()
    assert cyl.area == pytest.approx(energy(f, cx), rel=1e-9)
