"""Planar cellular decompositions with conductances.

A complex is a straight-line embedded planar graph whose faces are
triangles or quadrilaterals, with one outer boundary cycle E1
(counterclockwise) and m - 1 inner boundary cycles E2^i (clockwise as
seen from the domain, so the domain is always on the left).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import MalformedInput

TWO_PI = 2.0 * math.pi


def signed_area(xy: np.ndarray) -> float:
    """Shoelace area of a closed polygon given as an (n, 2) array."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def point_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd test for many points against one polygon."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xcross)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def _corner_angles(xy: np.ndarray) -> np.ndarray:
    """Interior angles of a counterclockwise polygon at each corner."""
    prev = np.roll(xy, 1, axis=0) - xy
    nxt = np.roll(xy, -1, axis=0) - xy
    cross = nxt[:, 0] * prev[:, 1] - nxt[:, 1] * prev[:, 0]
    dot = (nxt * prev).sum(axis=1)
    return np.mod(np.arctan2(cross, dot), TWO_PI)


@dataclass(frozen=True, eq=False)
class PlanarComplex:
    coords: np.ndarray
    edges: np.ndarray
    faces: tuple
    outer_boundary: tuple
    inner_boundaries: tuple
    conductance: np.ndarray
    k: float = 1.0

    @classmethod
    def build(cls, coords, edges, faces, outer_boundary, inner_boundaries,
              conductance=1.0, k=1.0) -> "PlanarComplex":
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if np.isscalar(conductance):
            cond = np.full(len(edges), float(conductance))
        else:
            cond = np.asarray(conductance, dtype=float).reshape(-1)
        faces = tuple(tuple(int(v) for v in f) for f in faces)
        outer = tuple(int(v) for v in outer_boundary)
        inner = tuple(tuple(int(v) for v in c) for c in inner_boundaries)
        return cls(coords, edges, faces, outer, inner, cond, float(k))

    def with_conductance(self, conductance) -> "PlanarComplex":
        return replace(self, conductance=np.asarray(conductance, dtype=float).copy())

    # --- sizes -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def m(self) -> int:
        """Number of boundary cycles."""
        return 1 + len(self.inner_boundaries)

    @property
    def boundary_cycles(self) -> tuple:
        return (self.outer_boundary,) + tuple(self.inner_boundaries)

    # --- derived lookups (cached) -----------------------------------------
    @cached_property
    def edge_index(self) -> dict:
        return {(min(a, b), max(a, b)): i for i, (a, b) in enumerate(self.edges.tolist())}

    def edge_id(self, a: int, b: int) -> int:
        return self.edge_index[(min(a, b), max(a, b))]

    @cached_property
    def boundary_label(self) -> np.ndarray:
        """-1 for interior vertices, 0 for E1, i for E2^i."""
        lab = np.full(self.n_vertices, -1, dtype=np.int64)
        for i, cyc in enumerate(self.boundary_cycles):
            lab[list(cyc)] = i
        return lab

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_label < 0)

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_edges, dtype=bool)
        for cyc in self.boundary_cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                i = self.edge_index.get((min(a, b), max(a, b)))
                if i is not None:
                    mask[i] = True
        return mask

    @cached_property
    def rotation(self):
        """Counterclockwise neighbor rotation around each vertex.

        Returns (ptr, nbr, eid): the neighbors of v are nbr[ptr[v]:ptr[v+1]]
        sorted by angle, with the connecting edge ids in eid.
        """
        e = self.edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        eid = np.concatenate([np.arange(len(e)), np.arange(len(e))])
        d = self.coords[dst] - self.coords[src]
        ang = np.arctan2(d[:, 1], d[:, 0])
        order = np.lexsort((ang, src))
        counts = np.bincount(src, minlength=self.n_vertices)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        return ptr, dst[order], eid[order]

    def neighbors(self, v: int):
        ptr, nbr, eid = self.rotation
        return nbr[ptr[v]:ptr[v + 1]], eid[ptr[v]:ptr[v + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n_vertices)

    @cached_property
    def triangulation(self):
        """Geometric triangulation used for level tracing.

        Quads are split along the diagonal from their smallest vertex id; if
        that diagonal leaves a non-convex quad, the other diagonal is used.
        Returns (triangles, diagonals) where diagonals are vertex pairs that
        are not network edges.
        """
        tris, diags = [], []
        for f in self.faces:
            if len(f) == 3:
                tris.append(f)
                continue
            i = int(np.argmin(f))
            a, b, c, d = f[i:] + f[:i]
            t1, t2 = (a, b, c), (a, c, d)
            if min(signed_area(self.coords[list(t1)]), signed_area(self.coords[list(t2)])) <= 0:
                t1, t2 = (b, c, d), (b, d, a)
                diags.append((min(b, d), max(b, d)))
            else:
                diags.append((min(a, c), max(a, c)))
            tris.extend([t1, t2])
        return np.asarray(tris, dtype=np.int64).reshape(-1, 3), sorted(set(diags))

    @cached_property
    def max_conductance(self) -> float:
        return float(self.conductance.max()) if self.n_edges else 0.0


def euler_characteristic(complex: PlanarComplex) -> int:
    return complex.n_vertices - complex.n_edges + len(complex.faces)


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)
    m: int = 0
    chi: int = 0

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok


def _segments_cross(p, q, r, s) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(p, q, r), orient(p, q, s)
    d3, d4 = orient(r, s, p), orient(r, s, q)
    return d1 * d2 < 0 and d3 * d4 < 0


def validate(complex: PlanarComplex, angle_tol: float = 1e-8) -> ValidationReport:
    """List every violated structural invariant of the complex."""
    issues = []
    V = complex.n_vertices
    xy = complex.coords
    rep = ValidationReport(issues=issues, m=complex.m, chi=euler_characteristic(complex))
    if xy.ndim != 2 or xy.shape[1] != 2 or not np.all(np.isfinite(xy)):
        issues.append("coordinates must be finite (x, y) pairs")
        return rep

    edges = complex.edges
    structural_ok = True
    if len(edges) and (edges.min() < 0 or edges.max() >= V):
        issues.append("edge references an unknown vertex id")
        return rep
    seen = {}
    for i, (a, b) in enumerate(edges.tolist()):
        if a == b:
            issues.append(f"edge {i} is a self-loop at vertex {a}")
            structural_ok = False
        key = (min(a, b), max(a, b))
        if key in seen:
            issues.append(f"edge {i} duplicates edge {seen[key]} {key}")
            structural_ok = False
        seen.setdefault(key, i)

    c = complex.conductance
    if len(c) != len(edges):
        issues.append(f"conductance has {len(c)} entries for {len(edges)} edges")
    else:
        bad = np.flatnonzero(~(np.isfinite(c) & (c > 0)))
        for i in bad.tolist():
            a, b = edges[i].tolist()
            issues.append(f"conductance of edge {i} ({a}, {b}) is not strictly positive and finite: {c[i]!r}")

    isolated = np.flatnonzero(complex.degree == 0)
    for v in isolated.tolist():
        issues.append(f"vertex {v} is not on any edge")
        structural_ok = False

    face_count = np.zeros(len(edges), dtype=np.int64)
    for fi, f in enumerate(complex.faces):
        if len(f) not in (3, 4):
            issues.append(f"face {fi} has {len(f)} vertices (expected 3 or 4)")
            structural_ok = False
            continue
        if min(f) < 0 or max(f) >= V or len(set(f)) != len(f):
            issues.append(f"face {fi} has invalid or repeated vertex ids {list(f)}")
            structural_ok = False
            continue
        for a, b in zip(f, f[1:] + f[:1]):
            i = seen.get((min(a, b), max(a, b)))
            if i is None:
                issues.append(f"face {fi} references missing edge ({a}, {b})")
                structural_ok = False
            else:
                face_count[i] += 1
        if signed_area(xy[list(f)]) <= 0:
            issues.append(f"face {fi} has non-positive signed area (not counterclockwise)")
            structural_ok = False

    boundary_edges = set()
    cycles = complex.boundary_cycles
    used = {}
    for ci, cyc in enumerate(cycles):
        name = "outer boundary" if ci == 0 else f"inner boundary {ci}"
        if len(cyc) < 3:
            issues.append(f"{name} has fewer than 3 vertices")
            structural_ok = False
            continue
        if min(cyc) < 0 or max(cyc) >= V:
            issues.append(f"{name} references an unknown vertex id")
            structural_ok = False
            continue
        if len(set(cyc)) != len(cyc):
            issues.append(f"{name} is not a simple cycle")
            structural_ok = False
        for v in cyc:
            if v in used and used[v] != ci:
                issues.append(f"boundary cycles {used[v]} and {ci} share vertex {v}")
                structural_ok = False
            used[v] = ci
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            key = (min(a, b), max(a, b))
            if key not in seen:
                issues.append(f"{name} step ({a}, {b}) is not an edge")
                structural_ok = False
            boundary_edges.add(key)
        area = signed_area(xy[list(cyc)])
        if ci == 0 and area <= 0:
            issues.append("outer boundary is not counterclockwise")
            structural_ok = False
        if ci > 0 and area >= 0:
            issues.append(f"{name} is not clockwise as seen from the domain")
            structural_ok = False

    for key, i in seen.items():
        n = face_count[i]
        on_bd = key in boundary_edges
        if on_bd and n != 1:
            issues.append(f"boundary edge {i} {key} lies on {n} faces (expected 1)")
        elif not on_bd and n != 2:
            issues.append(f"interior edge {i} {key} lies on {n} faces (expected 2)")

    chi = rep.chi
    if chi != 2 - complex.m:
        issues.append(f"edge count vs. Euler characteristic: V - E + F = {chi}, expected 2 - m = {2 - complex.m}")

    if not structural_ok or issues:
        return rep

    # containment of inner cycles in the outer one, and mutual exteriority
    outer_xy = xy[list(cycles[0])]
    for ci, cyc in enumerate(cycles[1:], start=1):
        if not np.all(point_in_polygon(xy[list(cyc)], outer_xy)):
            issues.append(f"inner boundary {ci} is not enclosed by the outer boundary")
        for cj, other in enumerate(cycles[1:], start=1):
            if cj != ci and np.any(point_in_polygon(xy[list(cyc)], xy[list(other)])):
                issues.append(f"inner boundary {ci} lies inside inner boundary {cj}")

    # boundary polylines must not cross each other
    segs = [(a, b) for cyc in cycles for a, b in zip(cyc, cyc[1:] + cyc[:1])]
    if len(segs) <= 4000:
        P = xy[[s[0] for s in segs]]
        Q = xy[[s[1] for s in segs]]
        lo = np.minimum(P, Q)
        hi = np.maximum(P, Q)
        for i in range(len(segs)):
            cand = np.flatnonzero(np.all(lo[i + 1:] <= hi[i], axis=1) & np.all(hi[i + 1:] >= lo[i], axis=1)) + i + 1
            for j in cand.tolist():
                if set(segs[i]) & set(segs[j]):
                    continue
                if _segments_cross(P[i], Q[i], P[j], Q[j]):
                    issues.append(f"boundary segments {segs[i]} and {segs[j]} cross")

    # local injectivity: corner angles of faces around each vertex fill the
    # full turn (interior) or exactly the domain angle (boundary)
    total = np.zeros(V)
    for f in complex.faces:
        np.add.at(total, list(f), _corner_angles(xy[list(f)]))
    expected = np.full(V, TWO_PI)
    for cyc in cycles:
        expected[list(cyc)] = _corner_angles(xy[list(cyc)])
    bad = np.flatnonzero(np.abs(total - expected) > angle_tol)
    for v in bad[:20].tolist():
        issues.append(f"embedding folds at vertex {v}: face angles sum to {total[v]:.6g}, expected {expected[v]:.6g}")
    return rep


def require_valid(complex: PlanarComplex) -> PlanarComplex:
    rep = validate(complex)
    if not rep.ok:
        raise MalformedInput("invalid complex: " + "; ".join(rep.issues[:10]))
    return complex


# --- JSON input format -----------------------------------------------------

def complex_to_dict(complex: PlanarComplex) -> dict:
    return {
        "vertices": complex.coords.tolist(),
        "edges": complex.edges.tolist(),
        "faces": [list(f) for f in complex.faces],
        "outer_boundary": list(complex.outer_boundary),
        "inner_boundaries": [list(c) for c in complex.inner_boundaries],
        "conductance": complex.conductance.tolist(),
        "k": complex.k,
    }


def complex_from_dict(doc: dict) -> PlanarComplex:
    try:
        cond = doc.get("conductance", 1.0)
        if isinstance(cond, (int, float)) and not isinstance(cond, bool):
            if float(cond) != 1.0:
                raise MalformedInput("scalar conductance must be 1.0 (unit conductance)")
        out = PlanarComplex.build(
            doc["vertices"], doc["edges"], doc["faces"], doc["outer_boundary"],
            doc.get("inner_boundaries", []), cond, doc.get("k", 1.0))
    except MalformedInput:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"malformed complex document: {exc!r}") from exc
    if not (math.isfinite(out.k) and out.k > 0):
        raise MalformedInput(f"k must be a positive real, got {out.k!r}")
    return out


def load_complex(path) -> PlanarComplex:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    return complex_from_dict(doc)


def dump_complex(complex: PlanarComplex, path) -> None:
    Path(path).write_text(json.dumps(complex_to_dict(complex)), encoding="utf-8")
