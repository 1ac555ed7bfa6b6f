"""Rectangle tilings of flat cylinders and of ladders of singular pairs of pants.

Each descending edge u -> v (g(u) > g(v)) becomes a rectangle of height
g(u) - g(v) and width c(u, v)(g(u) - g(v)). A band of values [h_bot, h_top]
becomes a straight cylinder of height h_top - h_bot whose circumference is
the flux through its top curve. Positions s along the circumference are
in length units in [0, C).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyFailure, DegenerateValues, NotApplicable, NotFound
from .levels import (cycle_encloses_hole, extract_level, index_formula_check, value_tol)
from .network import PlanarComplex, point_in_polygon
from .solver import boundary_fluxes, energy
from .surgery import CutPiece, PointRegistry, band_piece, ensure_separation, _point_keys

CONSISTENCY_TOL = 1e-9


@dataclass
class Rect:
    edge: int           # parent edge id
    upper: int          # global id of the upper end of the (sub-)edge
    lower: int
    s: float            # left edge position on the circumference
    y: float            # depth of the top edge below the cylinder top
    width: float
    height: float
    conductance: float  # modified conductance of the (sub-)edge
    flat: bool = False

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Marker:
    cylinder: int
    s: float
    a: float
    b: float


@dataclass
class Segment:
    """Stretch of a cylinder's top or bottom circle belonging to one point."""
    point: int          # global id (vertex or type-I point)
    start: float
    width: float
    run: int = 0        # index of the up-run at a bottom point (several at pinch vertices)


@dataclass
class Cylinder:
    id: int
    circumference: float
    height: float
    h_top: float
    h_bottom: float
    top_label: str
    bottom_label: str
    rects: list
    parent: int | None = None
    glue: dict | None = None               # child position -> parent position map
    bottom_quotient: list = field(default_factory=list)
    top_segments: list = field(default_factory=list)
    bottom_segments: list = field(default_factory=list)
    children: list = field(default_factory=list)

    @property
    def markers(self) -> list:
        return [Marker(self.id, r.s, r.y, r.y + r.height) for r in self.rects if r.height > 0]

    @property
    def area(self) -> float:
        return float(sum(r.area for r in self.rects))


@dataclass
class SingularPoint:
    vertex: int
    index: int
    cone_angle: float
    positions: list      # (cylinder id, "top"/"bottom", s)


@dataclass
class FlatSurface:
    cylinders: list
    singular_points: list
    boundary_lengths: dict
    k: float
    m: int
    energy: float

    @property
    def area(self) -> float:
        return float(sum(c.area for c in self.cylinders))

    def cylinder(self, cid: int) -> Cylinder:
        return self.cylinders[cid]

    def leaves(self) -> list:
        return [c for c in self.cylinders if not c.children]

    def path_heights(self) -> list:
        """Sum of cylinder heights along each root-to-leaf path."""
        out = []
        for leaf in self.leaves():
            total, c = 0.0, leaf
            while c is not None:
                total += c.height
                c = None if c.parent is None else self.cylinders[c.parent]
            out.append(total)
        return out


# --- band view and sweep --------------------------------------------------------

def _circ_dist(a: float, b: float, C: float) -> float:
    d = (a - b) % C
    return min(d, C - d)


class BandView:
    """Descending sub-edges of a band with rotation data around every point."""

    def __init__(self, values, ids, hi, lo, width, cond, parent, flat_pairs, rotation):
        self.values = values
        self.ids = ids
        self.hi, self.lo = hi, lo
        self.width = width
        self.cond = cond
        self.parent = parent
        self.flat_pairs = flat_pairs     # (local a, local b, parent edge, cond) of flat edges
        self._rotation = rotation

    @classmethod
    def from_piece(cls, piece: CutPiece, complex: PlanarComplex, field) -> "BandView":
        desc = np.flatnonzero((piece.parent_edge >= 0) & ~piece.flat)
        hi, lo = piece.edges[desc, 0], piece.edges[desc, 1]
        parent = piece.parent_edge[desc]
        n = piece.n_vertices
        inc = [dict() for _ in range(n)]
        for j, (a, b, pe) in enumerate(zip(hi.tolist(), lo.tolist(), parent.tolist())):
            inc[a][pe] = j
            inc[b][pe] = j
        g = field.values
        tol = value_tol(field.k)
        V = complex.n_vertices
        ids = piece.ids

        def rotation(v):
            gid = int(ids[v])
            if gid < V:
                nbr, eid = complex.neighbors(gid)
                d = g[nbr] - g[gid]
                sgn = np.where(np.abs(d) <= tol, 0, np.sign(d)).astype(int)
                return [(int(s), inc[v].get(int(e), -1)) for s, e in zip(sgn, eid)]
            return [(1 if lo[j] == v else -1, j) for j in inc[v].values()]

        fl = np.flatnonzero(piece.flat)
        flat_pairs = [(int(piece.edges[i, 0]), int(piece.edges[i, 1]), int(piece.parent_edge[i]),
                       float(piece.conductance[i])) for i in fl]
        return cls(piece.values, ids, hi, lo, piece.flux[desc], piece.conductance[desc], parent,
                   flat_pairs, rotation)

    def rotation(self, v):
        return self._rotation(v)

    def runs(self, v, want: int) -> list:
        """Maximal runs (counterclockwise) of in-band edges leaving v upward (+1) or downward (-1)."""
        rot = self.rotation(v)
        n = len(rot)
        starts = [i for i in range(n) if rot[i][0] != want]
        if not starts:
            es = [e for _, e in rot if e >= 0]
            return [es] if es else []
        i0 = starts[0]
        out, cur = [], []
        for t in range(1, n + 1):
            s, e = rot[(i0 + t) % n]
            if s == want:
                if e >= 0:
                    cur.append(e)
            elif cur:
                out.append(cur)
                cur = []
        if cur:
            out.append(cur)
        return out

    def vertices_by_height(self, exclude) -> list:
        touched = np.zeros(len(self.ids), dtype=bool)
        touched[self.hi] = True
        touched[self.lo] = True
        vs = [v for v in np.flatnonzero(touched).tolist() if v not in exclude]
        return sorted(vs, key=lambda v: (-self.values[v], int(self.ids[v])))


@dataclass
class SweepResult:
    pos: np.ndarray
    circumference: float
    top_segments: list
    bottom_segments: list
    bottom_runs: dict      # local vertex -> list of runs (edge index lists)
    anchor: dict           # local vertex -> start of its outgoing block


def sweep_band(band: BandView, top_order: list, tol: float = CONSISTENCY_TOL) -> SweepResult:
    """Place every rectangle of a band left to right, top to bottom.

    Top points are laid out in the given counterclockwise order starting at
    s = 0, each with its descending rectangles in clockwise neighbor order.
    Every other point then starts its own rectangles under the left edge of
    its leftmost incoming rectangle; incoming rectangles must be contiguous
    and carry the same total flux as the outgoing ones.
    """
    nd = len(band.hi)
    pos = np.full(nd, np.nan)
    w = band.width
    cursor = 0.0
    tops, anchor = [], {}
    for p in top_order:
        runs = band.runs(p, -1)
        if len(runs) > 1:
            raise ConsistencyFailure(f"top point {int(band.ids[p])} has {len(runs)} descending sectors in one band")
        outs = [e for e in reversed(runs[0])] if runs else []
        anchor[p] = cursor
        start = cursor
        for e in outs:
            pos[e] = cursor
            cursor += w[e]
        tops.append(Segment(int(band.ids[p]), start, cursor - start))
    C = cursor
    if not C > 0:
        raise ConsistencyFailure("band has zero circumference")
    atol = tol * C
    pos = np.mod(pos, C)

    def contiguous(run):
        for e1, e2 in zip(run, run[1:]):
            if _circ_dist(pos[e1] + w[e1], pos[e2], C) > atol:
                raise ConsistencyFailure(
                    f"incoming rectangles of edges {int(band.parent[e1])} and {int(band.parent[e2])} are not adjacent")

    bottoms, bottom_runs = [], {}
    for v in band.vertices_by_height(set(top_order)):
        ups = band.runs(v, +1)
        downs = band.runs(v, -1)
        if any(np.isnan(pos[e]) for r in ups for e in r):
            raise ConsistencyFailure(f"vertex {int(band.ids[v])} reached before its incoming rectangles")
        if not downs:
            bottom_runs[v] = ups
            for ri, run in enumerate(ups):
                contiguous(run)
                bottoms.append(Segment(int(band.ids[v]), float(pos[run[0]]), float(w[run].sum()), ri))
            continue
        if len(ups) != 1 or len(downs) != 1:
            raise ConsistencyFailure(f"vertex {int(band.ids[v])} is not regular inside its band")
        run = ups[0]
        contiguous(run)
        inflow = float(w[run].sum())
        outs = list(reversed(downs[0]))
        outflow = float(w[outs].sum())
        if abs(inflow - outflow) > atol:
            raise ConsistencyFailure(f"flux imbalance {inflow - outflow:.3e} at vertex {int(band.ids[v])}")
        start = float(pos[run[0]])
        anchor[v] = start
        cur = start
        for e in outs:
            pos[e] = cur % C
            cur += w[e]
    if np.isnan(pos).any():
        raise ConsistencyFailure("some rectangles were never placed")
    return SweepResult(pos, C, tops, bottoms, bottom_runs, anchor)


def _rects_from_sweep(band: BandView, res: SweepResult, h_top: float) -> list:
    rects = []
    order = np.lexsort((band.lo, band.hi, band.parent))
    for j in order.tolist():
        a, b = band.hi[j], band.lo[j]
        rects.append(Rect(int(band.parent[j]), int(band.ids[a]), int(band.ids[b]), float(res.pos[j]),
                          float(h_top - band.values[a]), float(band.width[j]),
                          float(band.values[a] - band.values[b]), float(band.cond[j])))
    for a, b, pe, c in band.flat_pairs:
        s = res.anchor.get(a, res.anchor.get(b, 0.0))
        rects.append(Rect(pe, int(band.ids[a]), int(band.ids[b]), float(s) % res.circumference,
                          float(h_top - band.values[a]), 0.0, 0.0, c, True))
    return rects


def _ordered_top(keys, registry: PointRegistry, h: float, local: dict) -> list:
    """Local indices of top points in cycle order, rotated to start at the smallest global id."""
    gids = []
    for key in keys:
        gid = key[1] if key[0] == "v" else registry.point(key[1], h)
        if gid in local:
            gids.append(gid)
    if not gids:
        return []
    i = int(np.argmin(gids))
    gids = gids[i:] + gids[:i]
    return [local[gid] for gid in gids]


def _band_cylinder(cid, complex, field, registry, h_top, h_bottom, region, top_keys, bottom_keys,
                   top_label, bottom_label, allow_flat_edges=False):
    piece = band_piece(complex, field, h_top, h_bottom, registry, region, [top_keys], bottom_keys,
                       allow_flat_edges)
    band = BandView.from_piece(piece, complex, field)
    top_order = _ordered_top(top_keys, registry, h_top, piece.local())
    res = sweep_band(band, top_order)
    rects = _rects_from_sweep(band, res, h_top)
    cyl = Cylinder(cid, res.circumference, h_top - h_bottom, h_top, h_bottom, top_label, bottom_label,
                   rects, top_segments=res.top_segments, bottom_segments=res.bottom_segments)
    return cyl, piece, band, res


def _require_generic(field, complex):
    E = complex.edges
    d = np.abs(field.values[E[:, 0]] - field.values[E[:, 1]])
    flat = np.flatnonzero((d <= value_tol(field.k)) & ~complex.boundary_edge_mask)
    if len(flat):
        raise DegenerateValues(f"{len(flat)} edges join vertices with equal values",
                               vertices=E[flat].ravel().tolist(), edges=flat.tolist())


def tile_annulus(complex: PlanarComplex, field, allow_flat_edges: bool = False, method: str = "sweep") -> Cylinder:
    """Tile a doubly connected domain as one straight cylinder of height k."""
    if complex.m != 2:
        raise NotApplicable(f"annulus tiling needs m = 2, got m = {complex.m}")
    if not allow_flat_edges:
        _require_generic(field, complex)
        rep = index_formula_check(field, complex)
        if rep.singular:
            raise ConsistencyFailure(f"annulus has singular vertices {rep.singular}")
    if method == "levels":
        return _tile_annulus_levels(complex, field, allow_flat_edges)
    registry = PointRegistry(complex, field)
    top = [("v", v) for v in complex.outer_boundary]
    bottom = [[("v", v) for v in complex.inner_boundaries[0]]]
    cyl, *_ = _band_cylinder(0, complex, field, registry, field.k, 0.0, None, top, bottom, "E1", "E2^1",
                             allow_flat_edges)
    _check_circumference(cyl, abs(boundary_fluxes(field, complex)[0]))
    return cyl


def _check_circumference(cyl, expected):
    if abs(cyl.circumference - expected) > CONSISTENCY_TOL * max(expected, 1e-300):
        raise ConsistencyFailure(f"cylinder {cyl.id} circumference {cyl.circumference} != flux {expected}")


# --- level-by-level construction on the refined complex -----------------------------

class _RefinedBand(BandView):
    def __init__(self, ref, field):
        tol = value_tol(field.k)
        vals = ref.values
        a, b = ref.edges[:, 0], ref.edges[:, 1]
        d = vals[a] - vals[b]
        keep = np.abs(d) > tol
        hi = np.where(d > 0, a, b)[keep]
        lo = np.where(d > 0, b, a)[keep]
        width = ref.flux()[keep]
        flat_idx = np.flatnonzero(~keep)
        flat_pairs = [(int(a[i]), int(b[i]), int(ref.parent_edge[i]), float(ref.conductance[i]))
                      for i in flat_idx]
        self._flat_parent = set(int(ref.parent_edge[i]) for i in flat_idx)
        n = ref.n_vertices
        nbrs = [[] for _ in range(n)]
        for j, (x, y) in enumerate(zip(hi.tolist(), lo.tolist())):
            nbrs[x].append((y, j))
            nbrs[y].append((x, j))
        for i in flat_idx.tolist():
            nbrs[a[i]].append((b[i], -1))
            nbrs[b[i]].append((a[i], -1))
        xy = ref.coords
        rot = []
        for v in range(n):
            items = nbrs[v]
            ang = [math.atan2(xy[o][1] - xy[v][1], xy[o][0] - xy[v][0]) for o, _ in items]
            items = [items[i] for i in np.argsort(ang, kind="stable")]
            rot.append([(0 if abs(vals[o] - vals[v]) <= tol else (1 if vals[o] > vals[v] else -1), j)
                        for o, j in items])
        super().__init__(vals, np.arange(n), hi, lo, width, ref.conductance[keep], ref.parent_edge[keep],
                         flat_pairs, rot.__getitem__)


def _tile_annulus_levels(complex, field, allow_flat_edges):
    """Marker placement level by level, with the balance check at every level point."""
    g = field.values
    k = field.k
    tol = value_tol(k)
    vals = []
    for v in sorted(set(g.tolist()), reverse=True):
        if not vals or vals[-1] - v > tol:
            vals.append(v)
    ref = ensure_separation(complex, field, vals[1:-1])
    band = _RefinedBand(ref, field)
    type1 = {}
    for gid, (eid, t) in ref.provenance.items():
        if ref.kind[gid] == 1:
            type1[(eid, ref.values[gid])] = gid
    w = band.width
    pos = np.full(len(band.hi), np.nan)
    C = abs(boundary_fluxes(field, complex)[0])
    atol = CONSISTENCY_TOL * C
    events = [(h, 0, None) for h in vals[:-1]]
    events += [(float(ref.values[v]), 1, v) for v in np.flatnonzero(ref.kind == 2).tolist()]
    events.sort(key=lambda x: (-x[0], x[1]))
    for h, kind, v in events:
        if kind == 1:          # type-II vertex: one rectangle above, one below, same position
            (up,), (down,) = band.runs(v, +1), band.runs(v, -1)
            pos[down[0]] = pos[up[0]]
            continue
        if h == k:
            pts = list(complex.outer_boundary)
        else:
            L = extract_level(field, complex, h, allow_flat_edges)
            if len(L.cycles) != 1:
                raise ConsistencyFailure(f"level {h} of an annulus is not a single cycle")
            pts = []
            for p in L.cycles[0].points:
                if p.kind == "vertex":
                    pts.append(p.vertex)
                elif p.kind == "edge":
                    pts.append(type1[(p.edge, h)])
        i = int(np.argmin(pts))
        pts = pts[i:] + pts[:i]
        cursor = None
        for p in pts:
            ups = band.runs(p, +1)
            downs = band.runs(p, -1)
            if len(ups) > 1 or len(downs) > 1:
                raise ConsistencyFailure(f"point {p} is not regular")
            if ups:
                run = ups[0]
                for e1, e2 in zip(run, run[1:]):
                    if _circ_dist(pos[e1] + w[e1], pos[e2], C) > atol:
                        raise ConsistencyFailure(f"markers above point {p} are not contiguous")
                start = pos[run[0]]
                if cursor is None:
                    cursor = start
                elif _circ_dist(cursor, start, C) > atol:
                    raise ConsistencyFailure(f"inconsistent marker placement at point {p} on level {h}")
                if downs and abs(w[run].sum() - w[downs[0]].sum()) > atol:
                    raise ConsistencyFailure(f"flux imbalance at point {p}")
            elif cursor is None:
                cursor = 0.0
            for e in reversed(downs[0] if downs else []):
                pos[e] = cursor % C
                cursor += w[e]
    if np.isnan(pos).any():
        raise ConsistencyFailure("some rectangles were never placed")
    res = SweepResult(pos, C, [], [], {}, {})
    for j in range(len(band.hi)):
        res.anchor.setdefault(int(band.hi[j]), float(pos[j]))
    rects = _rects_from_sweep(band, res, k)
    return Cylinder(0, C, k, k, 0.0, "E1", "E2^1", rects)


# --- verification -------------------------------------------------------------

@dataclass
class TilingReport:
    area: float
    expected_area: float
    area_residual: float
    overlap: float
    max_gap: float
    gaps: list
    n_slabs: int

    @property
    def relative_area_residual(self) -> float:
        return self.area_residual / self.expected_area if self.expected_area > 0 else self.area_residual

    def ok(self, tol: float = 1e-9) -> bool:
        C_H = self.expected_area
        return (self.relative_area_residual <= tol and self.overlap <= tol * C_H and not self.gaps)


def verify_tiling(cyl: Cylinder, gap_tol: float = 1e-8) -> TilingReport:
    """Area residual, overlap excess and a gap sweep over every horizontal slab.

    Slabs run between consecutive distinct rectangle tops/bottoms, so every
    height strictly inside a slab sees the same set of rectangles. In each
    slab the covered length of the circle is measured with wraparound; any
    shortfall beyond gap_tol * C is reported as a gap and any excess of the
    summed widths over the covered length counts as overlap area.
    """
    C, H = cyl.circumference, cyl.height
    R = [r for r in cyl.rects if r.width > 0 and r.height > 0]
    area = float(sum(r.area for r in cyl.rects))
    expected = C * H
    if not R:
        return TilingReport(area, expected, abs(area - expected), 0.0, C, [(0.0, H, 0.0)] if C > 0 else [], 0)
    s = np.array([r.s for r in R]) % C
    w = np.array([r.width for r in R])
    y0 = np.array([r.y for r in R])
    y1 = y0 + np.array([r.height for r in R])
    ys = np.unique(np.concatenate([[0.0, H], y0, y1]))
    merge_tol = 1e-12 * max(H, 1e-300)
    keep = np.concatenate([[True], np.diff(ys) > merge_tol])
    ys = ys[keep]
    i0 = np.clip(np.searchsorted(ys, y0 - merge_tol), 0, len(ys) - 1)
    i1 = np.clip(np.searchsorted(ys, y1 - merge_tol), 0, len(ys) - 1)
    nslab = len(ys) - 1
    starts = [[] for _ in range(nslab + 1)]
    ends = [[] for _ in range(nslab + 1)]
    for j, (a, b) in enumerate(zip(i0.tolist(), i1.tolist())):
        if b > a:
            starts[a].append(j)
            ends[b].append(j)
    active = set()
    overlap = 0.0
    max_gap = 0.0
    gaps = []
    for i in range(nslab):
        active.difference_update(ends[i])
        active.update(starts[i])
        thick = ys[i + 1] - ys[i]
        idx = np.fromiter(active, dtype=np.int64, count=len(active))
        if len(idx) == 0:
            covered, total = 0.0, 0.0
        else:
            a = s[idx]
            b = a + w[idx]
            wrap = b > C
            a = np.concatenate([a, np.zeros(int(wrap.sum()))])
            b = np.concatenate([np.minimum(b, C), b[wrap] - C])
            order = np.argsort(a, kind="stable")
            a, b = a[order], b[order]
            run = np.maximum.accumulate(b)
            prev = np.concatenate([[0.0], run[:-1]])
            covered = float(np.sum(np.clip(b - np.maximum(a, prev), 0, None)))
            total = float(np.sum(b - a))
        overlap += max(total - covered, 0.0) * thick
        gap = C - covered
        max_gap = max(max_gap, gap)
        if gap > gap_tol * C:
            gaps.append((float(ys[i]), float(ys[i + 1]), covered))
    return TilingReport(area, expected, abs(area - expected), float(overlap), float(max_gap), gaps, nslab)


# --- ladders of pants -----------------------------------------------------------

def _runs_with_signs(complex, field, u):
    """Alternating sectors around u: list of (sign, [edge ids]) counterclockwise, starting with an up sector."""
    nbr, eid = complex.neighbors(u)
    d = field.values[nbr] - field.values[u]
    sg = np.sign(d).astype(int)
    n = len(sg)
    i0 = next(i for i in range(n) if sg[i] < 0 and sg[(i + 1) % n] > 0)
    out = []
    for t in range(1, n + 1):
        i = (i0 + t) % n
        if out and out[-1][0] == sg[i]:
            out[-1][1].append(int(eid[i]))
        else:
            out.append((int(sg[i]), [int(eid[i])]))
    return out


def _rect_angle(cyl: Cylinder, s: float, where: str) -> float:
    """Total flat angle at position s on the cylinder's top or bottom circle, from incident rectangles."""
    C, H = cyl.circumference, cyl.height
    tol = 1e-9 * C
    total = 0.0
    for r in cyl.rects:
        if r.width <= 0 or r.height <= 0:
            continue
        if where == "top" and abs(r.y) > 1e-9 * max(H, 1e-300):
            continue
        if where == "bottom" and abs(r.y + r.height - H) > 1e-9 * max(H, 1e-300):
            continue
        off = (s - r.s) % C
        if off < tol or C - off < tol or abs(off - r.width) < tol:
            total += math.pi / 2
        elif off < r.width:
            total += math.pi
    return total


class _Ladder:
    def __init__(self, complex, field, allow_flat_edges=False):
        self.complex = complex
        self.field = field
        self.g = field.values
        self.tol = value_tol(field.k)
        self.registry = PointRegistry(complex, field)
        self.allow_flat = allow_flat_edges
        rep = index_formula_check(field, complex)
        self.index = dict(rep.singular)
        self.cylinders = []
        self.singular_points = []
        self.boundary_lengths = {}

    def run(self):
        cx = self.complex
        top = [("v", v) for v in cx.outer_boundary]
        region = np.ones(cx.n_vertices, dtype=bool)
        root = self._region(region, list(range(cx.m - 1)), top, self.field.k, "E1", None)
        fluxes = boundary_fluxes(self.field, cx)
        _check_circumference(self.cylinders[root], abs(fluxes[0]))
        self.boundary_lengths["E1"] = self.cylinders[root].circumference

    def _region(self, region, holes, top_keys, h_top, top_label, parent):
        cx, g = self.complex, self.g
        cid = len(self.cylinders)
        self.cylinders.append(None)
        if len(holes) == 1:
            i = holes[0]
            bottom = [[("v", v) for v in cx.inner_boundaries[i]]]
            cyl, *_ = _band_cylinder(cid, cx, self.field, self.registry, h_top, 0.0, region, top_keys, bottom,
                                     top_label, f"E2^{i + 1}")
            cyl.parent = parent
            self.cylinders[cid] = cyl
            self.boundary_lengths[f"E2^{i + 1}"] = cyl.circumference
            return cid
        cands = [v for v in self.index if region[v] and g[v] < h_top - self.tol]
        if not cands:
            raise NotFound(f"no singular vertex below level {h_top} enclosing holes {holes}")
        h2 = max(g[v] for v in cands)
        L = extract_level(self.field, cx, h2)
        at = {v for v in cands if abs(g[v] - h2) <= self.tol}
        comps = [c for c in L.components if any(v in at for cyc in c.cycles for v in cyc.vertex_ids)]
        if len(comps) != 1:
            raise NotFound(f"expected one singular bouquet at level {h2}, found {len(comps)}")
        comp = comps[0]
        for i in holes:
            if not any(cycle_encloses_hole(c, cx, i) for c in comp.cycles):
                raise NotFound(f"singular curve at level {h2} does not enclose inner boundary {i + 1}")
        cyc_keys = [_point_keys(c) for c in comp.cycles]
        label = f"singular level {h2!r}"
        cyl, piece, band, res = _band_cylinder(cid, cx, self.field, self.registry, h_top, h2, region, top_keys,
                                               cyc_keys, top_label, label)
        cyl.parent = parent
        self.cylinders[cid] = cyl
        below = region & (g < h2 - self.tol)
        children = []
        for j, cyc in enumerate(comp.cycles):
            inside = below & point_in_polygon(cx.coords, cyc.polygon)
            holes_j = [i for i in holes if cycle_encloses_hole(cyc, cx, i)]
            child = self._region(inside, holes_j, cyc_keys[j], h2, f"loop {j} of {label}", cid)
            children.append(child)
            self.cylinders[cid].children.append(child)
            loop_len = self.cylinders[child].circumference
            seg_len = sum(sg.width for sg in cyl.bottom_segments
                          if sg.point in self._loop_gids(cyc_keys[j], h2) and sg.point not in comp.tangencies)
            if seg_len > loop_len * (1 + CONSISTENCY_TOL):
                raise ConsistencyFailure("loop circumference shorter than its glued bottom arcs")
        self._glue(cyl, comp, cyc_keys, children, h2)
        return cid

    def _loop_gids(self, keys, h):
        return {k[1] if k[0] == "v" else self.registry.point(k[1], h) for k in keys}

    def _glue(self, parent: Cylinder, comp, cyc_keys, children, h2):
        """Attach each loop cylinder to the parent's bottom and pinch at tangency vertices."""
        cx, g = self.complex, self.g
        Cp = parent.circumference
        atol = CONSISTENCY_TOL * Cp
        bottom = {}
        for sg in parent.bottom_segments:
            bottom.setdefault(sg.point, []).append(sg)
        tang = set(comp.tangencies)
        # split of each up-sector at a pinch vertex between the two neighboring loops
        pinch = {}
        for u in sorted(tang):
            sectors = _runs_with_signs(cx, self.field, u)
            ups = [set(e) for s, e in sectors if s > 0]
            downs = [set(e) for s, e in sectors if s < 0]
            segs = sorted(bottom[u], key=lambda sg: sg.run)
            if len(segs) != len(ups):
                raise ConsistencyFailure(f"pinch vertex {u}: {len(segs)} bottom runs for {len(ups)} up sectors")
            up_w = []
            seg_of_up = []
            for sector in ups:
                match = [sg for sg in segs if self._seg_edges(parent, sg) <= sector]
                if len(match) != 1:
                    raise ConsistencyFailure(f"cannot match up sector at pinch vertex {u}")
                seg_of_up.append(match[0])
                up_w.append(match[0].width)
            down_w, down_child = [], []
            for sector in downs:
                found = None
                for ch in children:
                    cyl = self.cylinders[ch]
                    for ts in cyl.top_segments:
                        if ts.point == u and self._top_edges(cyl, u) <= sector:
                            found = (ch, ts)
                if found is None:
                    raise ConsistencyFailure(f"down sector at pinch vertex {u} has no loop cylinder")
                down_child.append(found)
                down_w.append(found[1].width)
            n = len(ups)
            # e_i + l_i = up_i and l_i + e_{i+1} = down_i; l_0 is free within the feasible range
            lo, hi = self._feasible(up_w, down_w)
            if lo > hi + atol:
                raise ConsistencyFailure(f"no consistent pinch split at vertex {u}")
            lam = 0.5 * (lo + hi)
            e, l = self._split(lam, up_w, down_w)
            pinch[u] = (seg_of_up, down_child, e, l)

        for j, ch in enumerate(children):
            child = self.cylinders[ch]
            pieces = []
            for ts in child.top_segments:
                if ts.point in tang:
                    seg_of_up, down_child, e, l = pinch[ts.point]
                    i = next(i for i, (c2, t2) in enumerate(down_child) if c2 == ch)
                    nxt = (i + 1) % len(seg_of_up)
                    pieces.append((ts.start, seg_of_up[nxt].start, e[nxt], False))
                    pieces.append((ts.start + e[nxt], seg_of_up[i].start + e[i], l[i], True))
                else:
                    segs = bottom.get(ts.point)
                    if not segs or len(segs) != 1:
                        raise ConsistencyFailure(f"loop point {ts.point} missing from the parent bottom")
                    if abs(segs[0].width - ts.width) > atol:
                        raise ConsistencyFailure(f"flux across the cut differs at point {ts.point}")
                    pieces.append((ts.start, segs[0].start, ts.width, False))
            # consecutive pieces must be contiguous on the parent except right after a pinch
            for a, b in zip(pieces, pieces[1:] + pieces[:1]):
                if b[3]:
                    continue
                if _circ_dist(a[1] + a[2], b[1], Cp) > atol:
                    raise ConsistencyFailure(f"gluing of cylinder {ch} to {parent.id} is not contiguous")
            child.glue = {"parent": parent.id,
                          "arcs": [[float(a), float(b % Cp), float(c)] for a, b, c, _ in pieces if c > 0]}

        for u in sorted(tang):
            seg_of_up, down_child, e, l = pinch[u]
            n = len(seg_of_up)
            parent_pos = [(seg_of_up[i].start + e[i]) % Cp for i in range(n)]
            positions = [(parent.id, "bottom", p) for p in parent_pos]
            angle = sum(_rect_angle(parent, p, "bottom") for p in parent_pos)
            for i, (ch, ts) in enumerate(down_child):
                child = self.cylinders[ch]
                cpos = (ts.start + e[(i + 1) % n]) % child.circumference
                positions.append((ch, "top", cpos))
                angle += _rect_angle(child, cpos, "top")
            parent.bottom_quotient.append([float(p) for p in parent_pos])
            self.singular_points.append(SingularPoint(int(u), int(self.index.get(u, 1 - n)), float(angle),
                                                      positions))

    @staticmethod
    def _split(lam, up_w, down_w):
        n = len(up_w)
        e, l = [0.0] * n, [0.0] * n
        l[0] = lam
        e[0] = up_w[0] - lam
        for i in range(1, n):
            e[i] = down_w[i - 1] - l[i - 1]
            l[i] = up_w[i] - e[i]
        return e, l

    @staticmethod
    def _feasible(up_w, down_w):
        # each e_i, l_i is affine in lam with slope +-1; intersect the half-lines where they are >= 0
        n = len(up_w)
        lo, hi = -math.inf, math.inf
        base_l = [0.0] * n
        base_e = [0.0] * n
        base_e[0] = up_w[0]
        for i in range(1, n):
            base_e[i] = down_w[i - 1] - base_l[i - 1]
            base_l[i] = up_w[i] - base_e[i]
        for i in range(n):
            lo = max(lo, -base_l[i])     # l_i = base_l + lam >= 0
            hi = min(hi, base_e[i])      # e_i = base_e - lam >= 0
        return lo, hi

    @staticmethod
    def _seg_edges(cyl, sg):
        return {r.edge for r in cyl.rects if r.lower == sg.point and r.height > 0
                and abs(r.y + r.height - cyl.height) <= 1e-9 * cyl.height
                and (r.s - sg.start) % cyl.circumference < sg.width - 1e-12 * cyl.circumference}

    @staticmethod
    def _top_edges(cyl, u):
        return {r.edge for r in cyl.rects if r.upper == u and abs(r.y) <= 1e-12 * cyl.height}


def tile_ladder(complex: PlanarComplex, field, allow_flat_edges: bool = False) -> FlatSurface:
    """Recursive cylinder decomposition along enclosing singular level curves."""
    if complex.m < 3:
        raise NotApplicable(f"ladder tiling needs m >= 3, got m = {complex.m}")
    _require_generic(field, complex)
    lad = _Ladder(complex, field)
    lad.run()
    return FlatSurface(lad.cylinders, lad.singular_points, lad.boundary_lengths, field.k, complex.m,
                       energy(field, complex))


def tile_pair_of_pants(complex: PlanarComplex, field) -> FlatSurface:
    if complex.m != 3:
        raise NotApplicable(f"pair of pants needs m = 3, got m = {complex.m}")
    return tile_ladder(complex, field)


def surface_from_cylinder(cyl: Cylinder, complex: PlanarComplex, field) -> FlatSurface:
    return FlatSurface([cyl], [], {"E1": cyl.circumference, "E2^1": cyl.circumference}, field.k, 2,
                       energy(field, complex))


def resolve_mode(mode: str, m: int) -> str:
    """The tiling mode to use for connectivity m; raises NotApplicable on a mismatch."""
    if mode == "auto":
        return "annulus" if m == 2 else ("pants" if m == 3 else "ladder")
    need = {"annulus": (m == 2, "m = 2"), "pants": (m == 3, "m = 3"), "ladder": (m >= 3, "m >= 3")}
    if mode not in need:
        raise ValueError(f"unknown mode {mode!r}")
    ok, what = need[mode]
    if not ok:
        raise NotApplicable(f"mode/connectivity mismatch: {mode} mode needs {what}, input has m = {m}")
    return mode


def tile(complex: PlanarComplex, field, mode: str = "auto", allow_flat_edges: bool = False) -> FlatSurface:
    """Dispatch by connectivity: annulus for m = 2, ladder otherwise."""
    mode = resolve_mode(mode, complex.m)
    if mode == "annulus":
        return surface_from_cylinder(tile_annulus(complex, field, allow_flat_edges), complex, field)
    if mode == "pants":
        return tile_pair_of_pants(complex, field)
    return tile_ladder(complex, field)


# --- doubling -------------------------------------------------------------------

@dataclass
class DoubledSurfaceDescriptor:
    genus: int
    area: float
    euler_characteristic: int
    singular_points: list
    cone_excess: float        # sum over singular points of (angle - 2 pi) / 2 pi, both copies


def double(surface: FlatSurface) -> DoubledSurfaceDescriptor:
    """Glue two copies along corresponding boundary circles.

    The Euler characteristic follows from the cone angles (flat metric,
    geodesic boundary): chi(S) = sum over cone points of (1 - angle / 2 pi),
    and the double has chi = 2 chi(S).
    """
    pts = list(surface.singular_points) * 2
    excess = sum((p.cone_angle - 2 * math.pi) / (2 * math.pi) for p in pts)
    chi = -int(round(excess))
    genus = 1 - chi // 2
    return DoubledSurfaceDescriptor(genus, 2 * surface.area, chi, pts, excess)
