"""Test complexes: the closed-form ring annulus and seeded holed-disk meshes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .network import PlanarComplex, point_in_polygon, signed_area, validate


def ring_annulus(n: int = 8, k: float = 1.0, radial_c: float = 1.0, ring_c: float = 1.0,
                 radii=(3.0, 2.0, 1.0)) -> PlanarComplex:
    """Three concentric rings of n vertices joined by radial edges: A(n, k).

    Vertex ids: outer ring 0..n-1, middle ring n..2n-1, inner ring 2n..3n-1,
    all counterclockwise by angle. With unit conductances the middle ring
    sits at k/2 and every ring edge is flat.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    ang = 2 * math.pi * np.arange(n) / n
    coords = np.concatenate([np.c_[r * np.cos(ang), r * np.sin(ang)] for r in radii])
    edges, cond = [], []
    for ring in range(3):
        for i in range(n):
            a, b = ring * n + i, ring * n + (i + 1) % n
            edges.append((min(a, b), max(a, b)))
            cond.append(ring_c)
    for i in range(n):
        edges.append((i, n + i))
        cond.append(radial_c)
        edges.append((n + i, 2 * n + i))
        cond.append(radial_c)
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append((i, j, n + j, n + i))
        faces.append((n + i, n + j, 2 * n + j, 2 * n + i))
    outer = tuple(range(n))
    inner = (tuple(reversed(range(2 * n, 3 * n))),)
    return PlanarComplex.build(coords, edges, faces, outer, inner, cond, k)


@dataclass
class Hole:
    cx: float
    cy: float
    r: float


@dataclass
class MeshConfig:
    holes: list
    n_outer: int = 48
    seed: int = 0
    radius: float = 1.0
    jitter: float = 0.35
    conductance_range: tuple | None = (0.1, 10.0)
    k: float = 1.0
    symmetry: int = 1           # n-fold rotational symmetry of points and conductances
    center_vertex: bool = False


def _circle(cx, cy, r, n, phase):
    t = phase + 2 * math.pi * np.arange(n) / n
    return np.c_[cx + r * np.cos(t), cy + r * np.sin(t)]


class MeshRejected(RuntimeError):
    pass


def _build_points(cfg: MeshConfig, rng):
    R = cfg.radius
    h = 2 * math.pi * R / cfg.n_outer
    sym = cfg.symmetry
    if cfg.n_outer % sym:
        raise ValueError("n_outer must be divisible by the symmetry order")
    groups = []   # (points, is_cycle, ccw)
    outer = _circle(0.0, 0.0, R, cfg.n_outer, 0.5 * h / R)
    groups.append(outer)
    for hole in cfg.holes:
        nh = max(8, int(round(2 * math.pi * hole.r / h)))
        phase = 0.3 + (math.atan2(hole.cy, hole.cx) if sym > 1 else 0.0)
        groups.append(_circle(hole.cx, hole.cy, hole.r, nh, phase))
    # jittered grid for the interior
    sp = 0.95 * h
    g = np.arange(-R, R + sp, sp)
    X, Y = np.meshgrid(g, g)
    pts = np.c_[X.ravel(), Y.ravel()]
    pts = pts + rng.uniform(-cfg.jitter, cfg.jitter, pts.shape) * sp
    keep = np.hypot(pts[:, 0], pts[:, 1]) < R - 0.55 * h
    for hole in cfg.holes:
        keep &= np.hypot(pts[:, 0] - hole.cx, pts[:, 1] - hole.cy) > hole.r + 0.55 * h
    pts = pts[keep]
    if sym > 1:
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
        base = pts[(th < 2 * math.pi / sym) & (np.hypot(pts[:, 0], pts[:, 1]) > 0.45 * h)]
        copies = []
        for j in range(sym):
            a = 2 * math.pi * j / sym
            rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
            copies.append(base @ rot.T)
        pts = np.concatenate(copies)
    if cfg.center_vertex:
        pts = np.concatenate([pts, [[0.0, 0.0]]])
    return groups, pts, h


def holed_disk(cfg: MeshConfig) -> PlanarComplex:
    """Delaunay mesh of a disk with circular holes; raises MeshRejected on bad luck."""
    rng = np.random.default_rng(cfg.seed)
    groups, interior, h = _build_points(cfg, rng)
    offsets = np.cumsum([0] + [len(g) for g in groups])
    coords = np.concatenate(groups + [interior])
    label = np.full(len(coords), -1)
    for i in range(len(groups)):
        label[offsets[i]:offsets[i + 1]] = i

    tri = Delaunay(coords).simplices
    cen = coords[tri].mean(axis=1)
    inside = point_in_polygon(cen, groups[0])
    for g in groups[1:]:
        inside &= ~point_in_polygon(cen, g)
    tri = tri[inside]
    # orient counterclockwise
    d1 = coords[tri[:, 1]] - coords[tri[:, 0]]
    d2 = coords[tri[:, 2]] - coords[tri[:, 0]]
    area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(np.abs(area) < 1e-12 * h * h):
        raise MeshRejected("degenerate triangle")
    flip = area < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]

    # drop unused vertices and renumber densely
    used = np.zeros(len(coords), dtype=bool)
    used[tri.ravel()] = True
    if not np.all(used[:offsets[-1]]):
        raise MeshRejected("boundary vertex not in the mesh")
    new_id = np.cumsum(used) - 1
    coords, label, tri = coords[used], label[used], new_id[tri]

    e = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    edges = np.unique(e, axis=0)
    both = (label[edges[:, 0]] >= 0) & (label[edges[:, 1]] >= 0)
    cycles = []
    bset = set()
    for i in range(len(groups)):
        ids = list(range(offsets[i], offsets[i + 1]))   # unchanged: boundary ids precede interior
        if i > 0:
            ids = ids[::-1]
        cycles.append(tuple(ids))
        for a, b in zip(ids, ids[1:] + ids[:1]):
            bset.add((min(a, b), max(a, b)))
    ekeys = set(map(tuple, edges.tolist()))
    if not bset <= ekeys:
        raise MeshRejected("boundary edge missing from triangulation")
    for a, b in edges[both].tolist():
        if (a, b) not in bset:
            raise MeshRejected("chord between boundary vertices")

    if cfg.conductance_range is None:
        cond = np.ones(len(edges))
    elif cfg.symmetry > 1:
        cond = _symmetric_conductance(coords, edges, cfg, rng)
    else:
        lo, hi = cfg.conductance_range
        cond = rng.uniform(lo, hi, len(edges))
    cx = PlanarComplex.build(coords, edges, [tuple(t) for t in tri.tolist()], cycles[0],
                             cycles[1:], cond, cfg.k)
    rep = validate(cx)
    if not rep.ok:
        raise MeshRejected("; ".join(rep.issues[:3]))
    return cx


def _symmetric_conductance(coords, edges, cfg, rng):
    """Conductances constant on orbits of the rotation group."""
    sym = cfg.symmetry
    lo, hi = cfg.conductance_range
    scale = np.abs(coords).max()
    keyed = {}
    a = 2 * math.pi / sym
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    q = lambda p: tuple(np.round(p / scale * 1e8).astype(np.int64).tolist())
    lookup = {q(p): i for i, p in enumerate(coords)}
    cond = np.empty(len(edges))
    for i, (u, v) in enumerate(edges.tolist()):
        orbit = []
        pu, pv = coords[u], coords[v]
        for _ in range(sym):
            iu, iv = lookup.get(q(pu)), lookup.get(q(pv))
            if iu is None or iv is None:
                raise MeshRejected("point set is not rotation invariant")
            orbit.append((min(iu, iv), max(iu, iv)))
            pu, pv = rot @ pu, rot @ pv
        key = min(orbit)
        if key not in keyed:
            keyed[key] = rng.uniform(lo, hi)
        cond[i] = keyed[key]
    return cond


def mesh_with_retries(cfg: MeshConfig, attempts: int = 20) -> PlanarComplex:
    last = None
    for j in range(attempts):
        try:
            return holed_disk(MeshConfig(**{**cfg.__dict__, "seed": cfg.seed + 1000 * j}))
        except MeshRejected as exc:
            last = exc
    raise MeshRejected(f"no valid mesh after {attempts} attempts: {last}")


# --- named fixtures ----------------------------------------------------------

def pants_fixture() -> PlanarComplex:
    """Fixture P: unit disk with two holes, random conductances, fixed seed."""
    return mesh_with_retries(MeshConfig(holes=[Hole(-0.45, 0.02, 0.2), Hole(0.45, -0.05, 0.17)],
                                        n_outer=48, seed=11))


def three_hole_fixture() -> PlanarComplex:
    """m = 4 fixture whose solution has two index -1 vertices."""
    return mesh_with_retries(MeshConfig(holes=[Hole(-0.5, 0.1, 0.15), Hole(0.35, 0.4, 0.16),
                                               Hole(0.3, -0.45, 0.14)], n_outer=56, seed=21))


def four_hole_fixture() -> PlanarComplex:
    """m = 5 fixture."""
    return mesh_with_retries(MeshConfig(holes=[Hole(-0.5, 0.0, 0.14), Hole(0.0, 0.5, 0.14),
                                               Hole(0.5, 0.0, 0.14), Hole(0.0, -0.5, 0.14)],
                                        n_outer=60, seed=31))


def monkey_saddle_fixture() -> PlanarComplex:
    """m = 4 fixture with 3-fold rotational symmetry about a center vertex.

    Symmetry forces the center vertex to carry the full index -2.
    """
    holes = [Hole(0.5 * math.cos(t), 0.5 * math.sin(t), 0.17)
             for t in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3)]
    return mesh_with_retries(MeshConfig(holes=holes, n_outer=48, seed=41, symmetry=3,
                                        center_vertex=True))


def random_holes(rng, m: int, margin: float = 0.1, r_range=(0.08, 0.2)):
    """m - 1 disjoint random holes kept at least `margin` apart and from the rim."""
    holes = []
    tries = 0
    while len(holes) < m - 1:
        tries += 1
        if tries > 10000:
            raise MeshRejected("cannot place holes")
        r = rng.uniform(*r_range)
        rad = rng.uniform(0.0, max(1.0 - r - margin, 0.0))
        t = rng.uniform(0, 2 * math.pi)
        c = (rad * math.cos(t), rad * math.sin(t))
        if all(math.hypot(c[0] - hh.cx, c[1] - hh.cy) > r + hh.r + margin for hh in holes):
            holes.append(Hole(c[0], c[1], r))
    return holes


def random_corpus(count: int = 52, seed: int = 2024, max_outer: int = 130):
    """Seeded corpus of generic complexes with m cycling through 2..5."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        m = 2 + i % 4
        n_outer = int(rng.integers(60, max_outer))
        h = 2 * math.pi / n_outer
        holes = random_holes(rng, m, margin=max(0.08, 2.5 * h), r_range=(0.08, 0.2 - 0.02 * m))
        cfg = MeshConfig(holes=holes, n_outer=n_outer,
                         seed=int(rng.integers(0, 2**31)))
        out.append(mesh_with_retries(cfg))
    return out


def large_annulus(n_outer: int = 360, seed: int = 5) -> PlanarComplex:
    """Roughly 10^4-vertex annulus used for the scale check."""
    return mesh_with_retries(MeshConfig(holes=[Hole(0.05, -0.03, 0.22)], n_outer=n_outer, seed=seed))
