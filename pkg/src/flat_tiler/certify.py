"""Residual tables for solved fields and tiled surfaces.

Every check is a named identity with a measured residual and a tolerance.
The same table backs `flat-tiler tile` (which refuses to write a surface
that fails) and `flat-tiler verify` (which re-derives everything it can
from the input complex instead of trusting the stored surface).
"""

from __future__ import annotations

import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateValues, MalformedInput
from .levels import extract_level, index_formula_check
from .network import PlanarComplex
from .solver import boundary_fluxes, energy, harmonic_tolerance, laplacian_all
from .surgery import two_sided_length
from .tiler import FlatSurface, _rect_angle, verify_tiling

DEFAULT_TOL = 1e-9

ENERGY_AREA = "energy = area"
NO_GAPS = "tiling: no gaps"
NO_OVERLAPS = "tiling: no overlaps"
CONE_ANGLE = "cone angle 2(n+1)pi"


def tolerance_from_env() -> float:
    raw = os.environ.get("FLAT_TILER_TOL")
    if raw is None or raw.strip() == "":
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise MalformedInput(f"FLAT_TILER_TOL must be a number, got {raw!r}") from exc
    if not (math.isfinite(tol) and tol > 0):
        raise MalformedInput(f"FLAT_TILER_TOL must be positive, got {raw!r}")
    return tol


@dataclass
class Residual:
    identity: str
    value: float
    tol: float
    where: str = ""

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tol


@dataclass
class RunReport:
    stages: list = field(default_factory=list)     # (name, status, seconds)
    residuals: list = field(default_factory=list)
    facts: dict = field(default_factory=dict)

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        except DegenerateValues:
            self.stages.append((name, "degenerate", time.perf_counter() - t0))
            raise
        except Exception:
            self.stages.append((name, "failed", time.perf_counter() - t0))
            raise
        self.stages.append((name, "ok", time.perf_counter() - t0))

    def skip(self, name, why):
        self.stages.append((name, f"skipped: {why}", 0.0))

    def add(self, identity, value, tol, where=""):
        self.residuals.append(Residual(identity, float(value), float(tol), where))

    @property
    def failures(self) -> list:
        return [r for r in self.residuals if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list:
        out = []
        for k, v in self.facts.items():
            out.append(f"{k}: {v}")
        out.append("stages:")
        for name, status, sec in self.stages:
            out.append(f"  {name:<22} {status:<10} {sec:8.3f} s")
        out.append("residuals:")
        for r in self.residuals:
            flag = "ok  " if r.ok else "FAIL"
            where = f"  [{r.where}]" if r.where else ""
            out.append(f"  {flag} {r.identity:<40} {r.value:10.3e} <= {r.tol:9.3e}{where}")
        return out


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def field_checks(report: RunReport, field, complex: PlanarComplex, tol: float) -> list:
    """Harmonicity, flux conservation and the Green energy identity. Returns the boundary fluxes."""
    g = field.values
    lap = laplacian_all(g, complex)
    inner = complex.interior_vertices
    harm = float(np.abs(lap[inner]).max()) if len(inner) else 0.0
    report.add("harmonicity", harm, harmonic_tolerance(complex, field.k))
    fluxes = boundary_fluxes(field, complex)
    C = abs(fluxes[0])
    report.add("flux conservation", abs(sum(fluxes)) / max(C, 1e-300), tol)
    E = energy(field, complex)
    report.add("energy = k * length(E1)", _rel(field.k * C, E), tol)
    report.facts.update(energy=E, C=C, boundary_fluxes=[round(f, 15) for f in fluxes])
    return fluxes


def index_checks(report: RunReport, field, complex: PlanarComplex):
    rep = index_formula_check(field, complex)
    report.add("index sum = 2 - m", abs(rep.total - rep.chi), 0.0)
    report.facts["singular_vertices"] = rep.singular
    return rep


def _two_sided(report, field, complex, surface, tol):
    for c in surface.cylinders:
        if c.children and c.h_bottom > 0:
            L = extract_level(field, complex, c.h_bottom)
            li, le = two_sided_length(complex, field, L)
            report.add("two-sided length", abs(li - le) / max(le, 1e-300), tol, f"level {float(c.h_bottom)!r}")


def surface_checks(report: RunReport, surface: FlatSurface, field, complex: PlanarComplex, tol: float,
                   fluxes=None, index_report=None, two_sided: bool = True):
    """Every identity a tiled surface must satisfy, measured against the input complex."""
    if fluxes is None:
        fluxes = boundary_fluxes(field, complex)
    cyls = surface.cylinders
    if surface.m != complex.m:
        raise MalformedInput(f"surface has m = {surface.m}, input has m = {complex.m}")
    ne = complex.n_edges
    for c in cyls:
        for r in c.rects:
            if not (0 <= r.edge < ne):
                raise MalformedInput(f"cylinder {c.id} references unknown edge {r.edge}")
    E = energy(field, complex)
    area = surface.area
    report.add(ENERGY_AREA, _rel(area, E), tol)
    report.add("stored energy", _rel(surface.energy, E), tol)
    report.facts.update(area=area, cylinders=len(cyls), singular_points=len(surface.singular_points))

    for c in cyls:
        CH = max(c.circumference * c.height, 1e-300)
        tr = verify_tiling(c)
        where = f"cylinder {c.id}"
        report.add("cylinder area = C * H", tr.relative_area_residual, tol, where)
        report.add(NO_OVERLAPS, tr.overlap / CH, tol, where)
        report.add(NO_GAPS, tr.max_gap / max(c.circumference, 1e-300), 10 * tol, where)
        report.add("height = h_top - h_bottom", abs(c.height - (c.h_top - c.h_bottom)), tol * surface.k, where)
        w = np.array([r.width for r in c.rects])
        h = np.array([r.height for r in c.rects])
        cond = np.array([r.conductance for r in c.rects])
        bad = float(np.abs(w - cond * h).max()) if len(w) else 0.0
        report.add("rect width = conductance * height", bad / max(c.circumference, 1e-300), tol, where)
        if c.glue is not None:
            glued = sum(a[2] for a in c.glue["arcs"])
            report.add("glued arcs cover child top", _rel(glued, c.circumference), tol, where)

    # boundary lengths against the flux sums
    root = cyls[0]
    report.add("boundary length E1 = flux", _rel(root.circumference, abs(fluxes[0])), tol)
    report.add("stored boundary length E1", _rel(surface.boundary_lengths.get("E1", math.nan), abs(fluxes[0])), tol)
    leaves = [c for c in cyls if not c.children]
    for i in range(1, complex.m):
        name = f"E2^{i}"
        leaf = [c for c in leaves if c.bottom_label == name]
        got = leaf[0].circumference if len(leaf) == 1 else math.nan
        report.add(f"boundary length {name} = flux", _rel(got, abs(fluxes[i])), tol)
        report.add(f"stored boundary length {name}", _rel(surface.boundary_lengths.get(name, math.nan),
                                                          abs(fluxes[i])), tol)
    for c, total in zip(leaves, surface.path_heights()):
        report.add("root-to-leaf heights sum to k", abs(total - surface.k), tol * surface.k, f"leaf {c.id}")

    # cone angles, recomputed from the incident rectangles
    if index_report is None:
        try:
            index_report = index_formula_check(field, complex)
        except DegenerateValues:
            if complex.m > 2:
                raise
            pass
    singular = dict(index_report.singular) if index_report is not None else {}
    stored = {p.vertex for p in surface.singular_points}
    missing = sorted(set(singular) ^ stored) if complex.m > 2 else sorted(stored)
    report.add("singular points = singular vertices", len(missing), 0)
    excess = 0
    for p in surface.singular_points:
        n = -singular.get(p.vertex, p.index)
        want = 2 * (n + 1) * math.pi
        got = 0.0
        for cid, side, s in p.positions:
            if not (0 <= cid < len(cyls)) or side not in ("top", "bottom"):
                raise MalformedInput(f"singular point {p.vertex} has a bad position ({cid}, {side!r})")
            got += _rect_angle(cyls[cid], s, side)
        where = f"vertex {p.vertex}"
        report.add(CONE_ANGLE, max(abs(got - want), abs(p.cone_angle - want)) / (2 * math.pi), tol, where)
        report.add("stored index", abs(p.index + n), 0, where)
        children_here = sum(1 for _, side, _ in p.positions if side == "top")
        report.add("children glued at pinch = n + 1", abs(children_here - (n + 1)), 0, where)
        excess += n
    report.add("sum of n over singular points = m - 2", abs(excess - (complex.m - 2)) if complex.m > 2 else excess, 0)
    if two_sided:
        try:
            _two_sided(report, field, complex, surface, tol)
        except DegenerateValues:
            report.skip("two-sided lengths", "degenerate level")
    return report
