from __future__ import annotations

import functools

import numpy as np
import pytest

from flat_tiler.fixtures import (four_hole_fixture, monkey_saddle_fixture, pants_fixture, random_corpus,
                                 ring_annulus, three_hole_fixture)
from flat_tiler.network import point_in_polygon
from flat_tiler.solver import solve


@functools.lru_cache(maxsize=None)
def named(name: str):
    make = {"pants": pants_fixture, "three": three_hole_fixture, "four": four_hole_fixture,
            "monkey": monkey_saddle_fixture}[name]
    cx = make()
    return cx, solve(cx)


@functools.lru_cache(maxsize=None)
def corpus():
    return [(cx, solve(cx)) for cx in random_corpus()]


@functools.lru_cache(maxsize=None)
def corpus_surfaces():
    from flat_tiler.tiler import tile
    return [tile(cx, f) for cx, f in corpus()]


@pytest.fixture
def a8():
    cx = ring_annulus(8, 1.0)
    return cx, solve(cx)


@pytest.fixture
def pants():
    return named("pants")


# --- independent oracles ---------------------------------------------------------

def dense_solve(complex, k):
    """Dirichlet solution by a dense solve of the full Laplacian with boundary rows replaced."""
    n = complex.n_vertices
    L = np.zeros((n, n))
    for (a, b), c in zip(complex.edges.tolist(), complex.conductance.tolist()):
        L[a, a] += c
        L[b, b] += c
        L[a, b] -= c
        L[b, a] -= c
    rhs = np.zeros(n)
    for i, cyc in enumerate(complex.boundary_cycles):
        for v in cyc:
            L[v, :] = 0.0
            L[v, v] = 1.0
            rhs[v] = k if i == 0 else 0.0
    return np.linalg.solve(L, rhs)


def crossing_flux(complex, g, h, inside_poly=None, lower_closed=True):
    """Sum of c (g(a) - g(b)) over edges descending across value h.

    With lower_closed the lower end may sit exactly at h (flux leaving the
    level downward); otherwise the upper end may (flux arriving from above).
    Restricted to edges whose lower end lies inside inside_poly when given.
    """
    E = complex.edges
    ga, gb = g[E[:, 0]], g[E[:, 1]]
    hi = np.where(ga >= gb, E[:, 0], E[:, 1])
    lo = np.where(ga >= gb, E[:, 1], E[:, 0])
    top, bot = g[hi], g[lo]
    if lower_closed:
        sel = (top >= h) & (bot < h) & (top > bot)
    else:
        sel = (top > h) & (bot <= h)
    if inside_poly is not None:
        sel &= point_in_polygon(complex.coords[lo], inside_poly)
    return float(np.sum(complex.conductance[sel] * (top[sel] - bot[sel])))


def scan_indices(complex, g):
    """Sign-change indices by walking each interior vertex's faces in order, independent of the rotation system."""
    out = {}
    faces_at = {}
    for f in complex.faces:
        for i, v in enumerate(f):
            faces_at.setdefault(v, []).append((f, i))
    xy = complex.coords
    for v in complex.interior_vertices.tolist():
        nbrs = set()
        for f, i in faces_at[v]:
            nbrs.add(f[(i + 1) % len(f)])
            nbrs.add(f[i - 1])
        nbrs = sorted(nbrs, key=lambda w: np.arctan2(*(xy[w] - xy[v])[::-1]))
        s = np.sign([g[w] - g[v] for w in nbrs])
        changes = int(np.sum(s != np.roll(s, 1)))
        ind = 1 - changes // 2
        if ind:
            out[v] = ind
    return out


# --- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES = []


def acceptance_line(number: int, ok: bool, text: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
