"""Level sets of the piecewise-affine extension of g, sign changes and indices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateValues, NotApplicable, NotFound
from .network import PlanarComplex, point_in_polygon, signed_area


def value_tol(k: float) -> float:
    return 1e-12 * k


# --- sign changes and indices -------------------------------------------------

def cyclic_sign_changes(seq) -> int:
    s = np.sign(np.asarray(seq, dtype=float))
    if np.any(s == 0):
        raise DegenerateValues("zero entry in sign sequence")
    return int(np.count_nonzero(s != np.roll(s, -1)))


def _neighbor_diffs(field, complex, v):
    nbr, _ = complex.neighbors(v)
    return field.values[nbr] - field.values[v], nbr


def sign_changes(field, complex: PlanarComplex, v: int) -> int:
    """Sign changes of g(w) - g(v) around v in counterclockwise order."""
    if complex.boundary_label[v] >= 0:
        raise ValueError(f"vertex {v} is on the boundary")
    d, nbr = _neighbor_diffs(field, complex, v)
    tie = np.abs(d) <= value_tol(field.k)
    if tie.any():
        raise DegenerateValues(f"vertex {v} ties neighbors {nbr[tie].tolist()}",
                               vertices=[v] + nbr[tie].tolist())
    return cyclic_sign_changes(d)


def index(field, complex: PlanarComplex, v: int) -> int:
    return 1 - sign_changes(field, complex, v) // 2


@dataclass
class IndexReport:
    sgc: dict
    index: dict
    total: int
    chi: int
    singular: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.total == self.chi


def all_sign_changes(field, complex: PlanarComplex):
    """Sgc at every vertex (vectorized) plus a mask of vertices with ties."""
    ptr, nbr, _ = complex.rotation
    src = np.repeat(np.arange(complex.n_vertices), np.diff(ptr))
    d = field.values[nbr] - field.values[src]
    tie = np.abs(d) <= value_tol(field.k)
    s = np.sign(d)
    nxt = np.arange(len(nbr)) + 1
    last = ptr[1:] - 1
    nxt[last[np.diff(ptr) > 0]] = ptr[:-1][np.diff(ptr) > 0]
    change = s != s[nxt]
    sgc = np.bincount(src, weights=change, minlength=complex.n_vertices).astype(np.int64)
    tied = np.bincount(src, weights=tie, minlength=complex.n_vertices) > 0
    return sgc, tied


def alternating_quads(field, complex: PlanarComplex) -> list:
    """Quad faces whose diagonal pairs straddle each other (a saddle inside the face)."""
    g = field.values
    out = []
    for fi, f in enumerate(complex.faces):
        if len(f) != 4:
            continue
        a, b, c, d = (g[v] for v in f)
        if min(a, c) > max(b, d) or max(a, c) < min(b, d):
            out.append(fi)
    return out


def index_formula_check(field, complex: PlanarComplex) -> IndexReport:
    """Sum of interior indices against the Euler characteristic 2 - m."""
    sgc, tied = all_sign_changes(field, complex)
    inner = complex.interior_vertices
    bad = inner[tied[inner]]
    if len(bad):
        raise DegenerateValues(f"{len(bad)} interior vertices tie a neighbor", vertices=bad.tolist())
    quads = alternating_quads(field, complex)
    if quads:
        verts = [v for fi in quads for v in complex.faces[fi]]
        raise DegenerateValues(f"quad faces {quads[:10]} carry an interior saddle", vertices=verts)
    ind = 1 - sgc[inner] // 2
    singular = [(int(v), int(i)) for v, i in zip(inner, ind) if i != 0]
    return IndexReport(sgc={int(v): int(s) for v, s in zip(inner, sgc[inner])},
                       index={int(v): int(i) for v, i in zip(inner, ind)},
                       total=int(ind.sum()), chi=2 - complex.m, singular=singular)


# --- level curves -----------------------------------------------------------

@dataclass(frozen=True)
class LevelPoint:
    kind: str            # "vertex", "edge" or "diagonal"
    vertex: int | None   # for vertex points
    ends: tuple          # (p, q), p < q, for edge and diagonal points
    edge: int | None     # network edge id for edge points
    t: float             # parameter from the smaller endpoint
    xy: tuple

    @property
    def key(self) -> tuple:
        if self.kind == "vertex":
            return ("v", self.vertex)
        if self.kind == "edge":
            return ("e", self.edge)
        return ("d",) + tuple(self.ends)

    @property
    def order(self) -> tuple:
        return {"vertex": 0, "edge": 1, "diagonal": 2}[self.kind], self.key[1:]


@dataclass
class LevelCycle:
    points: list

    @property
    def polygon(self) -> np.ndarray:
        return np.array([p.xy for p in self.points])

    def encloses(self, xy) -> np.ndarray:
        return point_in_polygon(np.atleast_2d(xy), self.polygon)

    @property
    def vertex_ids(self) -> list:
        return [p.vertex for p in self.points if p.kind == "vertex"]

    def __len__(self):
        return len(self.points)


@dataclass
class BouquetComponent:
    cycles: list
    tangencies: list


@dataclass
class LevelCurve:
    value: float
    components: list
    singular_vertices: list = field(default_factory=list)
    flat_edges: list = field(default_factory=list)

    @property
    def cycles(self) -> list:
        return [c for comp in self.components for c in comp.cycles]

    @property
    def is_simple(self) -> bool:
        return all(len(c.cycles) == 1 for c in self.components) and not self.singular_vertices


def _crossing(complex, g, p, q, h, edge_ids):
    p, q = (p, q) if p < q else (q, p)
    t = (h - g[p]) / (g[q] - g[p])
    xy = (1 - t) * complex.coords[p] + t * complex.coords[q]
    eid = edge_ids.get((p, q))
    kind = "edge" if eid is not None else "diagonal"
    return LevelPoint(kind, None, (p, q), eid, float(t), (float(xy[0]), float(xy[1])))


def _vertex_point(complex, v):
    x, y = complex.coords[v]
    return LevelPoint("vertex", int(v), (), None, 0.0, (float(x), float(y)))


def extract_level(field, complex: PlanarComplex, h: float, allow_flat_edges: bool = False) -> LevelCurve:
    """Full preimage of h, traced into simple cycles grouped as bouquets."""
    k = field.k
    if not (0 < h < k):
        raise ValueError(f"level {h} outside (0, {k})")
    tol = value_tol(k)
    g = field.values
    side = np.sign(g - h).astype(np.int64)
    side[np.abs(g - h) <= tol] = 0
    tris, _ = complex.triangulation
    S = side[tris]
    active = np.flatnonzero((S == 0).any(axis=1) | ((S > 0).any(axis=1) & (S < 0).any(axis=1)))
    edge_ids = complex.edge_index

    points = {}
    adj = {}
    after = {}      # (vertex key, other key) -> side of sector just counterclockwise of the segment
    flat = set()

    def add_point(p):
        points.setdefault(p.key, p)
        return p.key

    def add_seg(a, b):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    for ti in active.tolist():
        tri = tris[ti].tolist()
        zs = [v for v in tri if side[v] == 0]
        if len(zs) == 3:
            raise DegenerateValues(f"triangle {tri} lies entirely on level {h}", vertices=tri)
        if len(zs) == 2:
            a, b = sorted(zs)
            eid = edge_ids.get((a, b))
            if not allow_flat_edges:
                raise DegenerateValues(f"segment ({a}, {b}) lies on level {h}", vertices=[a, b],
                                       edges=[] if eid is None else [eid])
            if eid is not None:
                flat.add(eid)
            add_seg(add_point(_vertex_point(complex, a)), add_point(_vertex_point(complex, b)))
            continue
        if len(zs) == 1:
            z = zs[0]
            i = tri.index(z)
            p, q = tri[(i + 1) % 3], tri[(i + 2) % 3]
            zk = add_point(_vertex_point(complex, z))
            if side[p] * side[q] < 0:
                ck = add_point(_crossing(complex, g, p, q, h, edge_ids))
                add_seg(zk, ck)
                after[(zk, ck)] = int(side[q])
            continue
        cross = []
        for i in range(3):
            p, q = tri[i], tri[(i + 1) % 3]
            if side[p] * side[q] < 0:
                cross.append(add_point(_crossing(complex, g, p, q, h, edge_ids)))
        if len(cross) == 2:
            add_seg(*cross)

    partner = {}
    for key, nb in adj.items():
        nb = sorted(nb)
        if len(nb) == 2:
            partner[(key, nb[0])] = nb[1]
            partner[(key, nb[1])] = nb[0]
            continue
        if key[0] != "v" or len(nb) % 2 or any((key, o) not in after for o in nb):
            raise DegenerateValues(f"level {h} branches irregularly at {key}",
                                   vertices=[key[1]] if key[0] == "v" else [])
        c = np.array(points[key].xy)
        ang = [np.arctan2(points[o].xy[1] - c[1], points[o].xy[0] - c[0]) for o in nb]
        ordered = [nb[i] for i in np.argsort(ang)]
        n = len(ordered)
        for i, o in enumerate(ordered):
            if after[(key, o)] < 0:
                nxt = ordered[(i + 1) % n]
                partner[(key, o)] = nxt
                partner[(key, nxt)] = o
        if len([1 for o in nb if (key, o) in partner]) != n:
            raise DegenerateValues(f"cannot pair level segments at vertex {key[1]}", vertices=[key[1]])

    # trace closed cycles
    seen = set()
    cycles = []
    for a in sorted(adj):
        for b in sorted(adj[a]):
            if (a, b) in seen:
                continue
            seq = []
            x, y = a, b
            while (x, y) not in seen:
                seen.add((x, y))
                seq.append(x)
                x, y = y, partner[(y, x)]
            if (x, y) != (a, b):
                raise DegenerateValues(f"level {h} does not close up near {a}")
            cyc = [points[kk] for kk in seq]
            if signed_area(np.array([p.xy for p in cyc])) < 0:
                cyc = cyc[::-1]
            j = min(range(len(cyc)), key=lambda i: cyc[i].order)
            cyc = cyc[j:] + cyc[:j]
            # each undirected cycle is found twice (once per direction); keep one
            for i in range(len(seq)):
                x, y = seq[i], seq[(i + 1) % len(seq)]
                seen.add((y, x))
            cycles.append(LevelCycle(cyc))

    # group cycles sharing a vertex into bouquets
    parent = list(range(len(cycles)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    for ci, cyc in enumerate(cycles):
        for p in cyc.points:
            if p.kind == "vertex":
                if p.vertex in owner:
                    parent[find(ci)] = find(owner[p.vertex])
                else:
                    owner[p.vertex] = ci
    groups = {}
    for ci in range(len(cycles)):
        groups.setdefault(find(ci), []).append(cycles[ci])
    comps = []
    for cyc_list in groups.values():
        count = {}
        for cyc in cyc_list:
            for v in cyc.vertex_ids:
                count[v] = count.get(v, 0) + 1
        tang = sorted(v for v, n in count.items() if n > 1)
        cyc_list.sort(key=lambda c: c.points[0].order)
        comps.append(BouquetComponent(cyc_list, tang))
    comps.sort(key=lambda c: c.cycles[0].points[0].order)

    singular = []
    for key, nb in adj.items():
        if key[0] == "v" and len(nb) > 2 and complex.boundary_label[key[1]] < 0:
            singular.append((key[1], 1 - len(nb) // 2))
    singular.sort()
    return LevelCurve(float(h), comps, singular, sorted(flat))


def critical_values(field, complex: PlanarComplex) -> list:
    """{0, k} and the values at singular interior vertices, in decreasing order."""
    rep = index_formula_check(field, complex)
    tol = value_tol(field.k)
    vals = sorted({field.k, 0.0} | {float(field.values[v]) for v, _ in rep.singular}, reverse=True)
    out = []
    for v in vals:
        if not out or out[-1] - v > tol:
            out.append(v)
    return out


def cycle_encloses_hole(cycle: LevelCycle, complex: PlanarComplex, i: int) -> bool:
    return bool(cycle.encloses(complex.coords[complex.inner_boundaries[i][0]])[0])


def enclosing_singular_curve(field, complex: PlanarComplex) -> LevelCurve:
    """The singular level bouquet whose cycles jointly enclose every inner boundary."""
    if complex.m < 3:
        raise NotApplicable("no singular level curves exist for m < 3")
    K = critical_values(field, complex)
    found = []
    for h in K[1:-1]:
        L = extract_level(field, complex, h)
        sing = {v for v, _ in L.singular_vertices}
        for comp in L.components:
            if not any(v in sing for cyc in comp.cycles for v in cyc.vertex_ids):
                continue
            if all(any(cycle_encloses_hole(c, complex, i) for c in comp.cycles)
                   for i in range(complex.m - 1)):
                sv = [(v, ind) for v, ind in L.singular_vertices
                      if any(v in c.vertex_ids for c in comp.cycles)]
                found.append(LevelCurve(L.value, [comp], sv, []))
    if len(found) != 1:
        raise NotFound(f"expected one enclosing singular curve, found {len(found)}")
    return found[0]
