"""Dirichlet problem g = k on E1, g = 0 on the inner cycles, harmonic inside.

Also the functionals built on the network Laplacian: energy, normal
derivative, the first Green identity and flux-gradient lengths.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure
from .network import PlanarComplex

CG_THRESHOLD = 200_000


@dataclass(frozen=True, eq=False)
class HarmonicField:
    values: np.ndarray
    k: float
    residual: float = 0.0
    solve_stats: dict = field(default_factory=dict)

    def __getitem__(self, v):
        return self.values[v]

    def scaled(self, s: float) -> "HarmonicField":
        return HarmonicField(self.values * s, self.k * s, self.residual * abs(s), dict(self.solve_stats))


def _vals(u) -> np.ndarray:
    return u.values if isinstance(u, HarmonicField) else np.asarray(u, dtype=float)


def laplacian_matrix(n: int, edges: np.ndarray, cond: np.ndarray) -> sp.csr_matrix:
    a, b = edges[:, 0], edges[:, 1]
    W = sp.coo_matrix((np.concatenate([cond, cond]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                      shape=(n, n)).tocsr()
    deg = np.asarray(W.sum(axis=1)).ravel()
    return (sp.diags(deg) - W).tocsr()


def solve_pinned(n: int, edges: np.ndarray, cond: np.ndarray, pinned: np.ndarray,
                 pinned_values: np.ndarray, method: str = "auto"):
    """Harmonic extension of pinned values on a weighted graph.

    Returns (values, stats). Zero-conductance edges carry no coupling.
    """
    t0 = time.perf_counter()
    L = laplacian_matrix(n, edges, cond)
    g = np.zeros(n)
    g[pinned] = pinned_values
    free = np.ones(n, dtype=bool)
    free[pinned] = False
    fid = np.flatnonzero(free)
    stats = {"n_unknowns": int(len(fid))}
    if len(fid):
        A = L[fid][:, fid].tocsc()
        rhs = -(L[fid][:, pinned] @ g[pinned])
        use_cg = method == "cg" or (method == "auto" and len(fid) > CG_THRESHOLD)
        if use_cg:
            it = [0]

            def count(_):
                it[0] += 1
            x, info = spla.cg(A, rhs, rtol=1e-12, atol=0.0, maxiter=100 * n, callback=count)
            if info != 0:
                raise SolverFailure(f"conjugate gradient did not converge (info={info})")
            stats.update(method="cg", iterations=it[0], factorized=False)
        else:
            try:
                x = spla.splu(A, permc_spec="COLAMD").solve(rhs)
            except RuntimeError as exc:
                raise SolverFailure(f"singular reduced system: {exc}") from exc
            stats.update(method="direct", iterations=0, factorized=True)
        if not np.all(np.isfinite(x)):
            raise SolverFailure("non-finite solution")
        g[fid] = x
    stats["wall_time"] = time.perf_counter() - t0
    return g, stats


def boundary_values(complex: PlanarComplex, k: float):
    ids, vals = [], []
    for i, cyc in enumerate(complex.boundary_cycles):
        ids.extend(cyc)
        vals.extend([k if i == 0 else 0.0] * len(cyc))
    return np.asarray(ids, dtype=np.int64), np.asarray(vals, dtype=float)


def harmonic_tolerance(complex: PlanarComplex, k: float) -> float:
    return 1e-10 * k * float(complex.degree.max()) * complex.max_conductance


def solve(complex: PlanarComplex, k: float | None = None, method: str = "auto") -> HarmonicField:
    """Solve the Dirichlet problem with g = k on E1 and g = 0 on every E2^i."""
    k = complex.k if k is None else float(k)
    if not k > 0:
        raise ValueError("k must be positive")
    ids, vals = boundary_values(complex, k)
    g, stats = solve_pinned(complex.n_vertices, complex.edges, complex.conductance, ids, vals, method)
    g[ids] = vals   # pinned exactly
    lap = laplacian_matrix(complex.n_vertices, complex.edges, complex.conductance) @ g
    inner = complex.interior_vertices
    residual = float(np.abs(lap[inner]).max()) if len(inner) else 0.0
    tol = harmonic_tolerance(complex, k)
    if residual > tol:
        raise SolverFailure(f"harmonicity residual {residual:.3e} exceeds {tol:.3e}")
    return HarmonicField(g, k, residual, stats)


def _check_vertex(complex, x):
    if not (0 <= int(x) < complex.n_vertices):
        raise ValueError(f"unknown vertex id {x}")


def laplacian_all(u, complex: PlanarComplex) -> np.ndarray:
    return laplacian_matrix(complex.n_vertices, complex.edges, complex.conductance) @ _vals(u)


def laplacian(u, complex: PlanarComplex, x: int) -> float:
    _check_vertex(complex, x)
    g = _vals(u)
    nbr, eid = complex.neighbors(int(x))
    return float(np.sum(complex.conductance[eid] * (g[x] - g[nbr])))


def energy(u, complex: PlanarComplex, conductance=None) -> float:
    g = _vals(u)
    c = complex.conductance if conductance is None else conductance
    d = g[complex.edges[:, 0]] - g[complex.edges[:, 1]]
    return float(np.sum(c * d * d))


def _mask(complex, F) -> np.ndarray:
    mask = np.zeros(complex.n_vertices, dtype=bool)
    F = np.asarray(sorted(set(int(v) for v in F)), dtype=np.int64)
    if len(F) and (F[0] < 0 or F[-1] >= complex.n_vertices):
        raise ValueError("vertex subset contains unknown ids")
    mask[F] = True
    return mask


def vertex_boundary(complex: PlanarComplex, F) -> list:
    """Sorted ids of vertices outside F adjacent to some vertex of F."""
    inF = _mask(complex, F)
    a, b = complex.edges[:, 0], complex.edges[:, 1]
    out = np.zeros(complex.n_vertices, dtype=bool)
    out[a[inF[b] & ~inF[a]]] = True
    out[b[inF[a] & ~inF[b]]] = True
    return np.flatnonzero(out).tolist()


def _normal_derivatives(g, complex, inF) -> np.ndarray:
    """Normal derivative at every vertex outside F (zero if not adjacent)."""
    a, b = complex.edges[:, 0], complex.edges[:, 1]
    c = complex.conductance
    nd = np.zeros(complex.n_vertices)
    sel = inF[b] & ~inF[a]
    np.add.at(nd, a[sel], c[sel] * (g[a[sel]] - g[b[sel]]))
    sel = inF[a] & ~inF[b]
    np.add.at(nd, b[sel], c[sel] * (g[b[sel]] - g[a[sel]]))
    return nd


def normal_derivative(u, complex: PlanarComplex, F, x: int) -> float:
    _check_vertex(complex, x)
    inF = _mask(complex, F)
    x = int(x)
    nbr, eid = complex.neighbors(x)
    if inF[x] or not inF[nbr].any():
        raise ValueError(f"vertex {x} is not in the vertex boundary of F")
    g = _vals(u)
    sel = inF[nbr]
    return float(np.sum(complex.conductance[eid[sel]] * (g[x] - g[nbr[sel]])))


def green_identity_residual(u, v, complex: PlanarComplex, F) -> float:
    """LHS minus RHS of the first Green identity on F.

    LHS sums c (u(x)-u(y)) (v(x)-v(y)) over edges with at least one end in F;
    RHS is sum over F of Lap(u) v plus sum over the vertex boundary of the
    normal derivative of u times v.
    """
    gu, gv = _vals(u), _vals(v)
    if len(gu) != complex.n_vertices or len(gv) != complex.n_vertices:
        raise ValueError("fields must be defined on every vertex")
    inF = _mask(complex, F)
    a, b = complex.edges[:, 0], complex.edges[:, 1]
    c = complex.conductance
    touch = inF[a] | inF[b]
    lhs = np.sum(c[touch] * (gu[a[touch]] - gu[b[touch]]) * (gv[a[touch]] - gv[b[touch]]))
    lap = laplacian_all(gu, complex)
    nd = _normal_derivatives(gu, complex, inF)
    rhs = np.sum(lap[inF] * gv[inF]) + np.sum(nd[~inF] * gv[~inF])
    return float(lhs - rhs)


def flux_length(u, complex: PlanarComplex, F, S) -> float:
    """|sum over S of the normal derivative into F|, S inside the vertex boundary of F."""
    inF = _mask(complex, F)
    S = sorted(set(int(x) for x in S))
    dF = set(vertex_boundary(complex, np.flatnonzero(inF)))
    missing = [x for x in S if x not in dF]
    if missing:
        raise ValueError(f"vertices {missing[:10]} are not in the vertex boundary of F")
    nd = _normal_derivatives(_vals(u), complex, inF)
    return float(abs(np.sum(nd[S])))


def boundary_fluxes(u, complex: PlanarComplex) -> list:
    """Signed flux sum of each boundary cycle (E1 first).

    For cycle B the normal derivative is taken into the complement of B, so
    edges running directly between two boundary cycles are counted too.
    """
    g = _vals(u)
    lap = laplacian_all(g, complex)
    return [float(np.sum(lap[list(cyc)])) for cyc in complex.boundary_cycles]


def outer_length(u, complex: PlanarComplex) -> float:
    return abs(boundary_fluxes(u, complex)[0])
