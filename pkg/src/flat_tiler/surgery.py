"""Cutting the complex along level curves.

Every edge crossing a cut level is split at the crossing point (a type-I
vertex). The split halves get the flux-preserving conductance

    c~(u, x) = c(u, v) (g(u) - g(v)) / (g(u) - g(x)),

so that each half carries the parent's flux, and the arcs of the cut
curve join consecutive crossing points with conductance 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateValues
from .levels import LevelCurve, value_tol
from .network import PlanarComplex
from .solver import solve_pinned


class PointRegistry:
    """Stable ids for type-I points, allocated above the largest vertex id.

    All crossings of one level get consecutive ids ordered by parent edge
    id (one level crosses an edge at most once, so this is the (edge, t)
    order within the level).
    """

    def __init__(self, complex: PlanarComplex, field):
        self.complex = complex
        self.g = field.values
        self.tol = value_tol(field.k)
        self.next_id = complex.n_vertices
        self.ids = {}
        self.info = {}
        e = complex.edges
        self.hi = np.maximum(self.g[e[:, 0]], self.g[e[:, 1]])
        self.lo = np.minimum(self.g[e[:, 0]], self.g[e[:, 1]])

    def allocate_level(self, h: float) -> None:
        if ("level", h) in self.ids:
            return
        self.ids[("level", h)] = True
        crossing = np.flatnonzero((self.hi > h + self.tol) & (self.lo < h - self.tol))
        for eid in crossing.tolist():
            a, b = self.complex.edges[eid].tolist()
            p, q = min(a, b), max(a, b)
            t = (h - self.g[p]) / (self.g[q] - self.g[p])
            xy = (1 - t) * self.complex.coords[p] + t * self.complex.coords[q]
            self.ids[(eid, h)] = self.next_id
            self.info[self.next_id] = (eid, float(t), xy, h)
            self.next_id += 1

    def point(self, eid: int, h: float) -> int:
        self.allocate_level(h)
        return self.ids[(eid, h)]


@dataclass(eq=False)
class CutPiece:
    ids: np.ndarray            # global ids; original vertices keep theirs
    coords: np.ndarray
    values: np.ndarray
    edges: np.ndarray          # local indices; descending sub-edges are oriented high -> low
    conductance: np.ndarray    # modified conductances, 0 on arcs of the cut curve
    parent_edge: np.ndarray    # -1 on arcs
    flux: np.ndarray           # parent flux c (g(u) - g(v)) carried by each edge, 0 on arcs
    provenance: dict           # new global id -> (parent edge id, t)
    top: list                  # top cycles as lists of local indices
    bottom: list               # bottom cycles as lists of local indices
    pinned: np.ndarray         # local indices with prescribed values
    h_top: float
    h_bottom: float
    flat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n_vertices(self) -> int:
        return len(self.ids)

    def local(self) -> dict:
        return {int(g): i for i, g in enumerate(self.ids)}

    @property
    def network_edges(self) -> np.ndarray:
        return np.flatnonzero(self.parent_edge >= 0)

    def energy(self) -> float:
        d = self.values[self.edges[:, 0]] - self.values[self.edges[:, 1]]
        return float(np.sum(self.conductance * d * d))

    def resolve(self) -> np.ndarray:
        """Solve the induced Dirichlet problem with the inherited boundary values."""
        g, _ = solve_pinned(self.n_vertices, self.edges, self.conductance, self.pinned,
                            self.values[self.pinned])
        return g

    def boundary_flux(self, local_ids) -> float:
        """Signed flux out of the given vertices into the rest of the piece."""
        inset = np.zeros(self.n_vertices, dtype=bool)
        inset[list(local_ids)] = True
        a, b = self.edges[:, 0], self.edges[:, 1]
        d = self.conductance * (self.values[a] - self.values[b])
        return float(np.sum(d[inset[a] & ~inset[b]]) - np.sum(d[inset[b] & ~inset[a]]))

    def top_points(self) -> list:
        return sorted({i for cyc in self.top for i in cyc})

    def bottom_points(self) -> list:
        return sorted({i for cyc in self.bottom for i in cyc})


def _point_keys(cycle) -> list:
    """Network points of a level cycle: vertices and edge crossings (diagonal points are geometric only)."""
    out = []
    for p in cycle.points:
        if p.kind == "vertex":
            out.append(("v", p.vertex))
        elif p.kind == "edge":
            out.append(("e", p.edge))
    return out


def band_piece(complex: PlanarComplex, field, h_top: float, h_bottom: float, registry: PointRegistry,
               region=None, top_cycles=None, bottom_cycles=None, allow_flat_edges=False) -> CutPiece:
    """Sub-network of the band h_bottom <= g <= h_top.

    An edge belongs to the band if its portion inside [h_bottom, h_top] has
    positive length and its lower endpoint lies in `region` (a vertex mask;
    None means every vertex). Top and bottom cycles are lists of point keys
    ('v', id) / ('e', edge id) at the respective levels.
    """
    g = field.values
    tol = value_tol(field.k)
    E = complex.edges
    a0, b0 = E[:, 0], E[:, 1]
    up = g[a0] >= g[b0]
    hi_v = np.where(up, a0, b0)
    lo_v = np.where(up, b0, a0)
    ghi, glo = g[hi_v], g[lo_v]
    top_val = np.minimum(ghi, h_top)
    bot_val = np.maximum(glo, h_bottom)
    sel = top_val - bot_val > tol
    if region is not None:
        sel &= region[lo_v]
    flat = np.zeros(len(E), dtype=bool)
    if allow_flat_edges:
        flat = (np.abs(ghi - glo) <= tol) & (glo >= h_bottom - tol) & (ghi <= h_top + tol) \
            & ~complex.boundary_edge_mask
        if region is not None:
            flat &= region[lo_v] | region[hi_v]
    elif np.any(sel & (np.abs(ghi - glo) <= tol)):
        bad = np.flatnonzero(sel & (np.abs(ghi - glo) <= tol))
        raise DegenerateValues("flat edges inside band", edges=bad.tolist())

    ids, vals = [], []
    index = {}

    def vid(key):
        if key in index:
            return index[key]
        if key[0] == "v":
            gid, val = key[1], g[key[1]]
        else:
            gid, val = registry.point(key[1], key[2]), key[2]
        index[key] = len(ids)
        ids.append(gid)
        vals.append(val)
        return index[key]

    sub_edges, conds, parents, fluxes, flats = [], [], [], [], []
    c = complex.conductance
    for eid in np.flatnonzero(sel | flat).tolist():
        u, v = int(hi_v[eid]), int(lo_v[eid])
        if flat[eid]:
            su, sv = vid(("v", u)), vid(("v", v))
            sub_edges.append((su, sv))
            conds.append(c[eid])
            parents.append(eid)
            fluxes.append(0.0)
            flats.append(True)
            continue
        ktop = ("v", u) if ghi[eid] <= h_top + tol else ("e", eid, h_top)
        kbot = ("v", v) if glo[eid] >= h_bottom - tol else ("e", eid, h_bottom)
        su, sv = vid(ktop), vid(kbot)
        dpar = ghi[eid] - glo[eid]
        dsub = vals[su] - vals[sv]
        sub_edges.append((su, sv))
        conds.append(c[eid] * dpar / dsub)
        parents.append(eid)
        fluxes.append(c[eid] * dpar)
        flats.append(False)

    def cyc_local(cycles, h):
        out = []
        for cyc in cycles or []:
            loc = []
            for key in cyc:
                k2 = key if key[0] == "v" else ("e", key[1], h)
                if k2 in index:
                    loc.append(index[k2])
                elif key[0] == "v":
                    loc.append(vid(k2))
            out.append(loc)
        return out

    top = cyc_local(top_cycles, h_top)
    bottom = cyc_local(bottom_cycles, h_bottom)
    for cyc in top + bottom:
        for i in range(len(cyc)):
            p, q = cyc[i], cyc[(i + 1) % len(cyc)]
            if p != q:
                sub_edges.append((p, q))
                conds.append(0.0)
                parents.append(-1)
                fluxes.append(0.0)
                flats.append(False)

    ids_arr = np.asarray(ids, dtype=np.int64)
    vals_arr = np.asarray(vals, dtype=float)
    coords = np.empty((len(ids), 2))
    prov = {}
    for i, gid in enumerate(ids):
        if gid < complex.n_vertices:
            coords[i] = complex.coords[gid]
        else:
            eid, t, xy, _ = registry.info[gid]
            coords[i] = xy
            prov[gid] = (eid, t)
    onlevel = (np.abs(vals_arr - h_top) <= tol) | (np.abs(vals_arr - h_bottom) <= tol)
    bd = np.zeros(len(ids), dtype=bool)
    orig = ids_arr < complex.n_vertices
    bd[orig] = complex.boundary_label[ids_arr[orig]] >= 0
    pinned = np.flatnonzero(onlevel | bd)
    return CutPiece(ids_arr, coords, vals_arr, np.asarray(sub_edges, dtype=np.int64).reshape(-1, 2),
                    np.asarray(conds, dtype=float), np.asarray(parents, dtype=np.int64),
                    np.asarray(fluxes, dtype=float), prov, top, bottom, pinned,
                    float(h_top), float(h_bottom), np.asarray(flats, dtype=bool))


def cut_along(complex: PlanarComplex, field, L: LevelCurve, registry: PointRegistry | None = None):
    """Split into the piece below L (interior) and the piece above it (exterior)."""
    registry = registry or PointRegistry(complex, field)
    h = L.value
    cycles = [_point_keys(c) for c in L.cycles]
    outer = [[("v", v) for v in complex.outer_boundary]]
    inner = [[("v", v) for v in cyc] for cyc in complex.inner_boundaries]
    exterior = band_piece(complex, field, field.k, h, registry, top_cycles=outer, bottom_cycles=cycles)
    interior = band_piece(complex, field, h, 0.0, registry, top_cycles=cycles, bottom_cycles=inner)
    return interior, exterior


def split_components(piece: CutPiece) -> list:
    """Split a piece into the parts hanging below each of its top cycles.

    Top points are not used for connectivity, so a tangency vertex shared by
    several cycles is copied into each part.
    """
    n = piece.n_vertices
    is_top = np.zeros(n, dtype=bool)
    is_top[piece.top_points()] = True
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    net = piece.parent_edge >= 0
    for (a, b), ok in zip(piece.edges.tolist(), net):
        if ok and not is_top[a] and not is_top[b]:
            parent[find(a)] = find(b)
    for cyc in piece.bottom:
        for v in cyc[1:]:
            parent[find(v)] = find(cyc[0])
    # every network edge has a non-top endpoint; label edges by its component
    comp_of_edge = np.full(len(piece.edges), -1)
    for i, ((a, b), ok) in enumerate(zip(piece.edges.tolist(), net)):
        if ok:
            comp_of_edge[i] = find(b if is_top[a] else a)
    roots = sorted(set(comp_of_edge[comp_of_edge >= 0].tolist()))
    parts = []
    for r in roots:
        eidx = np.flatnonzero(comp_of_edge == r)
        verts = set(piece.edges[eidx].ravel().tolist())
        tops = [c for c in piece.top if sum(v in verts for v in c) * 2 > len(c)]
        bots = [c for c in piece.bottom if sum(v in verts for v in c) * 2 > len(c)]
        for cyc in tops + bots:
            verts.update(cyc)
        arcs = [i for i in np.flatnonzero(~net).tolist()
                if any(piece.edges[i, 0] in c and piece.edges[i, 1] in c for c in tops + bots)]
        keep_e = np.concatenate([eidx, np.asarray(arcs, dtype=np.int64)])
        vlist = sorted(verts)
        remap = {v: j for j, v in enumerate(vlist)}
        ids = piece.ids[vlist]
        parts.append(CutPiece(
            ids, piece.coords[vlist], piece.values[vlist],
            np.vectorize(remap.get, otypes=[np.int64])(piece.edges[keep_e]).reshape(-1, 2),
            piece.conductance[keep_e], piece.parent_edge[keep_e], piece.flux[keep_e],
            {int(g): piece.provenance[int(g)] for g in ids if int(g) in piece.provenance},
            [[remap[v] for v in c] for c in tops], [[remap[v] for v in c] for c in bots],
            np.asarray([remap[v] for v in piece.pinned.tolist() if v in remap], dtype=np.int64),
            piece.h_top, piece.h_bottom, piece.flat[keep_e]))
    return parts


def two_sided_length(complex: PlanarComplex, field, L: LevelCurve, registry: PointRegistry | None = None):
    """Flux-gradient length of L measured from the piece below and the piece above."""
    interior, exterior = cut_along(complex, field, L, registry)
    l_int = abs(interior.boundary_flux(interior.top_points()))
    l_ext = abs(exterior.boundary_flux(exterior.bottom_points()))
    return l_int, l_ext


# --- separation of successive levels ---------------------------------------------

@dataclass(eq=False)
class Refinement:
    coords: np.ndarray
    values: np.ndarray
    edges: np.ndarray          # sub-edges in parent order, each along its parent's stored direction
    conductance: np.ndarray
    parent_edge: np.ndarray
    kind: np.ndarray           # 0 original, 1 type I, 2 type II
    provenance: dict           # new id -> (parent edge id, t from the smaller parent endpoint)
    n_original: int
    levels: list

    @property
    def n_vertices(self) -> int:
        return len(self.values)

    def flux(self) -> np.ndarray:
        return self.conductance * np.abs(self.values[self.edges[:, 0]] - self.values[self.edges[:, 1]])


def ensure_separation(complex: PlanarComplex, field, levels, include_boundary: bool = True) -> Refinement:
    """Split edges at the given levels and keep successive levels two steps apart.

    Every edge crossing a level gets a type-I vertex there. Whenever a
    sub-edge joins two points lying on distinct levels, a type-II vertex is
    inserted at its midpoint. With include_boundary the boundary values k and
    0 count as levels (E1 and the E2 cycles are level curves too).
    """
    g = field.values
    tol = value_tol(field.k)
    lv = sorted({float(h) for h in levels} | ({field.k, 0.0} if include_boundary else set()), reverse=True)
    lv_arr = np.asarray(lv)

    def on_level(val):
        return len(lv_arr) and np.min(np.abs(lv_arr - val)) <= tol

    V = complex.n_vertices
    c = complex.conductance
    chains = []          # per edge: list of (value, t, kind); endpoints with kind 0
    new_pts = []         # (eid, t, value, kind)
    for eid, (a, b) in enumerate(complex.edges.tolist()):
        p, q = min(a, b), max(a, b)
        ga, gb = g[a], g[b]
        if abs(ga - gb) <= tol:
            chains.append([(ga, 0.0, 0), (gb, 1.0, 0)])
            continue
        pts = [(ga, 0.0, 0)]
        for h in lv:
            if min(ga, gb) + tol < h < max(ga, gb) - tol:
                s = (h - ga) / (gb - ga)        # position from a
                pts.append((h, s, 1))
        pts.append((gb, 1.0, 0))
        pts.sort(key=lambda x: x[1])
        out = [pts[0]]
        for prev, cur in zip(pts, pts[1:]):
            if on_level(prev[0]) and on_level(cur[0]) and abs(prev[0] - cur[0]) > tol:
                out.append((0.5 * (prev[0] + cur[0]), 0.5 * (prev[1] + cur[1]), 2))
            out.append(cur)
        chains.append(out)
        for val, s, kd in out[1:-1]:
            t = s if a == p else 1.0 - s
            new_pts.append((eid, t, val, kd, s))
    new_pts.sort(key=lambda x: (x[0], x[1]))
    ids = {}
    coords = [complex.coords]
    values = [g]
    kinds = [np.zeros(V, dtype=np.int64)]
    prov = {}
    extra_xy, extra_val, extra_kind = [], [], []
    for j, (eid, t, val, kd, s) in enumerate(new_pts):
        gid = V + j
        ids[(eid, s)] = gid
        p, q = sorted(complex.edges[eid].tolist())
        extra_xy.append((1 - t) * complex.coords[p] + t * complex.coords[q])
        extra_val.append(val)
        extra_kind.append(kd)
        prov[gid] = (eid, float(t))
    if new_pts:
        coords.append(np.asarray(extra_xy))
        values.append(np.asarray(extra_val))
        kinds.append(np.asarray(extra_kind, dtype=np.int64))
    sub_e, sub_c, sub_p = [], [], []
    for eid, (a, b) in enumerate(complex.edges.tolist()):
        chain = chains[eid]
        nodes = [a] + [ids[(eid, s)] for _, s, _ in chain[1:-1]] + [b]
        dpar = abs(g[a] - g[b])
        for i in range(len(nodes) - 1):
            sub_e.append((nodes[i], nodes[i + 1]))
            dsub = abs(chain[i][0] - chain[i + 1][0])
            sub_c.append(c[eid] if len(nodes) == 2 else c[eid] * dpar / dsub)
            sub_p.append(eid)
    return Refinement(np.concatenate(coords), np.concatenate(values),
                      np.asarray(sub_e, dtype=np.int64), np.asarray(sub_c), np.asarray(sub_p, dtype=np.int64),
                      np.concatenate(kinds), prov, V, lv)
