"""SVG renderings: unrolled cylinders with their rectangles, and the planar input with level curves."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import DegenerateValues
from .levels import critical_values, extract_level
from .network import PlanarComplex
from .tiler import Cylinder, FlatSurface

MARGIN = 20.0


def _f(x: float) -> str:
    return f"{x:.6g}"


def _doc(width, height, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
            f'viewBox="0 0 {_f(width)} {_f(height)}">')
    return "\n".join([head, *body, "</svg>", ""])


def _color(t: float) -> str:
    # pale blue at the top of a band to pale orange at the bottom
    t = min(max(t, 0.0), 1.0)
    r, g, b = (int(170 + 80 * t), int(200 - 10 * t), int(240 - 90 * t))
    return f"rgb({r},{g},{b})"


def cylinder_svg(cyl: Cylinder, singular_points=(), max_width: float = 800.0, max_height: float = 600.0) -> str:
    """The band [0, C) x [0, H] with one box per rectangle, depth growing downward.

    Rectangles that cross the seam at s = 0 are drawn at s and at s - C and
    clipped to the band, so both pieces appear. Markers are the vertical left
    edges of the rectangles.
    """
    C, H = cyl.circumference, cyl.height
    scale = min(max_width / C, max_height / H) if C > 0 and H > 0 else 1.0
    W, Ht = C * scale, H * scale
    X = lambda s: MARGIN + s * scale
    Y = lambda y: MARGIN + y * scale
    body = [
        f'<title>cylinder {cyl.id}: C = {cyl.circumference!r}, H = {cyl.height!r}</title>',
        f'<defs><clipPath id="band{cyl.id}"><rect x="{_f(X(0))}" y="{_f(Y(0))}" width="{_f(W)}" '
        f'height="{_f(Ht)}"/></clipPath></defs>',
        f'<rect x="{_f(X(0))}" y="{_f(Y(0))}" width="{_f(W)}" height="{_f(Ht)}" fill="white" stroke="black"/>',
        f'<g clip-path="url(#band{cyl.id})" stroke="black" stroke-width="0.5">',
    ]
    for r in cyl.rects:
        if r.width <= 0 or r.height <= 0:
            continue
        s = r.s % C
        fill = _color((r.y + 0.5 * r.height) / H)
        for shift in (0.0, -C) if s + r.width > C else (0.0,):
            body.append(f'<rect x="{_f(X(s + shift))}" y="{_f(Y(r.y))}" width="{_f(r.width * scale)}" '
                        f'height="{_f(r.height * scale)}" fill="{fill}"><title>edge {r.edge}</title></rect>')
    body.append("</g>")
    body.append('<g stroke="navy" stroke-width="1.2">')
    for mk in cyl.markers:
        x = X(mk.s % C)
        body.append(f'<line x1="{_f(x)}" y1="{_f(Y(mk.a))}" x2="{_f(x)}" y2="{_f(Y(mk.b))}"/>')
    body.append("</g>")
    for x in (X(0), X(C)):
        body.append(f'<line x1="{_f(x)}" y1="{_f(Y(0) - 8)}" x2="{_f(x)}" y2="{_f(Y(H) + 8)}" '
                    f'stroke="gray" stroke-dasharray="4 3"/>')
    for p in singular_points:
        for cid, side, s in p.positions:
            if cid != cyl.id:
                continue
            y = 0.0 if side == "top" else H
            body.append(f'<circle cx="{_f(X(s % C))}" cy="{_f(Y(y))}" r="4" fill="crimson">'
                        f'<title>vertex {p.vertex}, cone angle {p.cone_angle / math.pi:.6g} pi</title></circle>')
    return _doc(W + 2 * MARGIN, Ht + 2 * MARGIN, body)


def sample_levels(k: float, count: int) -> list:
    return [k * (i + 1) / (count + 1) for i in range(count)]


def mesh_svg(complex: PlanarComplex, field, samples: int = 9, size: float = 800.0) -> str:
    """Planar input with level curves at the critical values and at regular samples."""
    xy = complex.coords
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = float(max(hi - lo))
    scale = size / span if span > 0 else 1.0
    P = lambda p: (MARGIN + (p[0] - lo[0]) * scale, MARGIN + (hi[1] - p[1]) * scale)   # y up
    body = ['<g stroke="#bbbbbb" stroke-width="0.6">']
    bmask = complex.boundary_edge_mask
    for (a, b), on_b in zip(complex.edges.tolist(), bmask.tolist()):
        if on_b:
            continue
        (x1, y1), (x2, y2) = P(xy[a]), P(xy[b])
        body.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}"/>')
    body.append("</g>")
    for cyc in complex.boundary_cycles:
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (P(xy[v]) for v in cyc))
        body.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')

    try:
        crit = [h for h in critical_values(field, complex) if 0 < h < field.k]
    except DegenerateValues:
        crit = []
    levels = [(h, "crimson", 1.6) for h in crit] + [(h, "steelblue", 1.0) for h in sample_levels(field.k, samples)]
    for h, color, width in levels:
        try:
            L = extract_level(field, complex, h, allow_flat_edges=True)
        except DegenerateValues:
            continue
        for cyc in L.cycles:
            pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (P(p) for p in np.asarray(cyc.polygon)))
            body.append(f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="{width}">'
                        f'<title>g = {h:.6g}</title></polygon>')
    w = (hi[0] - lo[0]) * scale + 2 * MARGIN
    h = (hi[1] - lo[1]) * scale + 2 * MARGIN
    return _doc(w, h, body)


def write_svgs(directory, surface: FlatSurface, complex: PlanarComplex, field, samples: int = 9) -> list:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for c in surface.cylinders:
        p = out / f"cylinder_{c.id}.svg"
        p.write_text(cylinder_svg(c, surface.singular_points), encoding="utf-8")
        paths.append(p)
    p = out / "levels.svg"
    p.write_text(mesh_svg(complex, field, samples), encoding="utf-8")
    paths.append(p)
    return paths
