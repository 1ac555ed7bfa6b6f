"""JSON documents for solved fields and tiled flat surfaces.

Surface document layout (schema_version 1)::

    {
      "schema_version": 1, "kind": "surface",
      "k": float, "m": int, "energy": float, "area": float,
      "boundary_lengths": {"E1": C, "E2^1": ..., ...},
      "gluing_tree": [[parent id, child id], ...],
      "cylinders": [{
          "id", "circumference", "height", "h_top", "h_bottom",
          "top_label", "bottom_label", "parent", "children",
          "rects": [{"edge", "upper", "lower", "s", "y", "width", "height",
                     "conductance", "flat"}],
          "markers": [{"s", "a", "b"}],
          "top_segments" / "bottom_segments": [{"point", "start", "width", "run"}],
          "glue": null | {"parent": id, "arcs": [[child s, parent s, length], ...]},
          "bottom_quotient": [[parent s of each pinch copy], ...]}],
      "singular_points": [{"vertex", "index", "cone_angle",
                           "positions": [{"cylinder", "side", "s"}]}]
    }

Positions s are lengths along the circumference in [0, C); y is the depth of
a rectangle's top below the cylinder top. Markers are derived from rects and
ignored on load. Floats are written with repr precision, so a load/dump
round trip is bit exact, and keys are sorted so equal surfaces give equal
bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MalformedInput
from .tiler import Cylinder, FlatSurface, Rect, Segment, SingularPoint

SCHEMA_VERSION = 1


def _rect(r: Rect) -> dict:
    return {"edge": int(r.edge), "upper": int(r.upper), "lower": int(r.lower), "s": float(r.s),
            "y": float(r.y), "width": float(r.width), "height": float(r.height),
            "conductance": float(r.conductance), "flat": bool(r.flat)}


def _seg(s: Segment) -> dict:
    return {"point": int(s.point), "start": float(s.start), "width": float(s.width), "run": int(s.run)}


def _cylinder(c: Cylinder) -> dict:
    return {
        "id": int(c.id), "circumference": float(c.circumference), "height": float(c.height),
        "h_top": float(c.h_top), "h_bottom": float(c.h_bottom),
        "top_label": c.top_label, "bottom_label": c.bottom_label,
        "parent": None if c.parent is None else int(c.parent),
        "children": [int(x) for x in c.children],
        "rects": [_rect(r) for r in c.rects],
        "markers": [{"s": float(mk.s), "a": float(mk.a), "b": float(mk.b)} for mk in c.markers],
        "top_segments": [_seg(s) for s in c.top_segments],
        "bottom_segments": [_seg(s) for s in c.bottom_segments],
        "glue": c.glue,
        "bottom_quotient": [[float(p) for p in q] for q in c.bottom_quotient],
    }


def surface_to_dict(surface: FlatSurface) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "surface",
        "k": float(surface.k),
        "m": int(surface.m),
        "energy": float(surface.energy),
        "area": surface.area,
        "boundary_lengths": {str(a): float(b) for a, b in surface.boundary_lengths.items()},
        "gluing_tree": [[int(c.parent), int(c.id)] for c in surface.cylinders if c.parent is not None],
        "cylinders": [_cylinder(c) for c in surface.cylinders],
        "singular_points": [{
            "vertex": int(p.vertex), "index": int(p.index), "cone_angle": float(p.cone_angle),
            "positions": [{"cylinder": int(c), "side": side, "s": float(s)} for c, side, s in p.positions],
        } for p in surface.singular_points],
    }


def _check_version(doc, kind):
    if not isinstance(doc, dict):
        raise MalformedInput("document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise MalformedInput(f"unsupported schema_version {doc.get('schema_version')!r}")
    if doc.get("kind") != kind:
        raise MalformedInput(f"expected a {kind} document, got kind {doc.get('kind')!r}")


def surface_from_dict(doc: dict) -> FlatSurface:
    _check_version(doc, "surface")
    try:
        cyls = []
        for c in doc["cylinders"]:
            rects = [Rect(int(r["edge"]), int(r["upper"]), int(r["lower"]), float(r["s"]), float(r["y"]),
                          float(r["width"]), float(r["height"]), float(r["conductance"]), bool(r.get("flat", False)))
                     for r in c["rects"]]
            segs = lambda key: [Segment(int(s["point"]), float(s["start"]), float(s["width"]), int(s.get("run", 0)))
                                for s in c.get(key, [])]
            cyls.append(Cylinder(
                int(c["id"]), float(c["circumference"]), float(c["height"]), float(c["h_top"]),
                float(c["h_bottom"]), str(c["top_label"]), str(c["bottom_label"]), rects,
                None if c.get("parent") is None else int(c["parent"]), c.get("glue"),
                [[float(p) for p in q] for q in c.get("bottom_quotient", [])],
                segs("top_segments"), segs("bottom_segments"), [int(x) for x in c.get("children", [])]))
        pts = [SingularPoint(int(p["vertex"]), int(p["index"]), float(p["cone_angle"]),
                             [(int(q["cylinder"]), str(q["side"]), float(q["s"])) for q in p["positions"]])
               for p in doc["singular_points"]]
        surf = FlatSurface(cyls, pts, {str(a): float(b) for a, b in doc["boundary_lengths"].items()},
                           float(doc["k"]), int(doc["m"]), float(doc["energy"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"malformed surface document: {exc!r}") from exc
    for i, c in enumerate(surf.cylinders):
        if c.id != i:
            raise MalformedInput(f"cylinder at position {i} has id {c.id}")
    return surf


def field_to_dict(field, complex, fluxes=None) -> dict:
    from .solver import boundary_fluxes, energy
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "field",
        "k": float(field.k),
        "n_vertices": int(complex.n_vertices),
        "values": [float(x) for x in field.values],
        "energy": energy(field, complex),
        "boundary_fluxes": boundary_fluxes(field, complex) if fluxes is None else list(fluxes),
        "harmonicity_residual": float(field.residual),
    }


def field_values_from_dict(doc: dict) -> np.ndarray:
    _check_version(doc, "field")
    try:
        return np.asarray(doc["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"malformed field document: {exc!r}") from exc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def write_document(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_document(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
