import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flat_tiler.fixtures import ring_annulus
from flat_tiler.solver import (boundary_fluxes, energy, flux_length, green_identity_residual, laplacian,
                               normal_derivative, outer_length, solve, solve_pinned, vertex_boundary)

from conftest import corpus, dense_solve, named


def middle(n):
    return list(range(n, 2 * n))


def test_a8_closed_form(a8):
    cx, f = a8
    assert np.all(f.values[:8] == 1.0) and np.all(f.values[16:] == 0.0)
    assert np.allclose(f.values[8:16], 0.5, atol=1e-12, rtol=0)
    assert energy(f, cx) == pytest.approx(4.0, abs=1e-12)


def test_laplacian_examples(a8):
    cx, f = a8
    assert laplacian(np.ones(cx.n_vertices), cx, 3) == 0.0
    assert laplacian(f, cx, 9) == pytest.approx(0.0, abs=1e-12)
    assert laplacian(f, cx, 0) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        laplacian(f, cx, 99)


def test_doubled_radial_conductance_matches_dense_solve():
    cx = ring_annulus(8, 1.0, radial_c=2.0)
    f = solve(cx)
    oracle = dense_solve(cx, 1.0)
    assert np.allclose(f.values, oracle, atol=1e-12)
    # two radial edges of equal conductance pull the middle ring to the average
    assert np.allclose(f.values[8:16], 0.5, atol=1e-12)


def test_linear_in_k():
    cx, _ = named("pants")
    f1, f3 = solve(cx, 1.0), solve(cx, 3.0)
    assert np.allclose(f3.values, 3 * f1.values, rtol=1e-12, atol=1e-15)


def test_matches_dense_oracle_on_pants():
    cx, f = named("pants")
    assert np.allclose(f.values, dense_solve(cx, cx.k), atol=1e-11)


def test_cg_path_agrees_with_direct():
    cx, f = named("pants")
    g = solve(cx, method="cg")
    assert g.solve_stats["method"] == "cg"
    assert np.allclose(g.values, f.values, atol=1e-9)


def test_solve_pinned_counts_unknowns():
    cx = ring_annulus(6)
    ids = np.array(list(cx.outer_boundary) + list(cx.inner_boundaries[0]))
    vals = np.r_[np.ones(6), np.zeros(6)]
    g, stats = solve_pinned(cx.n_vertices, cx.edges, cx.conductance, ids, vals)
    assert stats["n_unknowns"] == 6 and stats["factorized"]
    assert np.allclose(g[6:12], 0.5)


def test_bad_k():
    with pytest.raises(ValueError):
        solve(ring_annulus(4), k=0.0)


def test_energy_examples(a8):
    cx, f = a8
    assert energy(np.full(cx.n_vertices, 2.0), cx) == 0.0
    assert energy(f, cx, cx.conductance * 3.0) == pytest.approx(3 * energy(f, cx), rel=1e-14)


def test_normal_derivative_examples(a8):
    cx, f = a8
    F = middle(8)
    assert normal_derivative(f, cx, F, 0) == pytest.approx(0.5, abs=1e-12)
    assert normal_derivative(f, cx, F, 16) == pytest.approx(-0.5, abs=1e-12)
    assert normal_derivative(np.ones(cx.n_vertices), cx, F, 3) == 0.0
    with pytest.raises(ValueError):
        normal_derivative(f, cx, F, 9)       # inside F
    assert vertex_boundary(cx, F) == list(range(8)) + list(range(16, 24))


def test_flux_length_examples(a8):
    cx, f = a8
    F = middle(8)
    assert flux_length(f, cx, F, range(8)) == pytest.approx(4.0, abs=1e-12)
    assert flux_length(f, cx, F, range(16, 24)) == pytest.approx(4.0, abs=1e-12)
    assert flux_length(np.zeros(cx.n_vertices), cx, F, range(8)) == 0.0
    with pytest.raises(ValueError):
        flux_length(f, cx, F, [9])
    assert boundary_fluxes(f, cx) == pytest.approx([4.0, -4.0], abs=1e-12)
    assert outer_length(f, cx) == pytest.approx(4.0, abs=1e-12)


def test_green_identity_examples(a8):
    cx, f = a8
    F = middle(8)
    assert abs(green_identity_residual(f, f, cx, F)) <= 1e-12
    assert abs(green_identity_residual(f, np.ones(cx.n_vertices), cx, F)) <= 1e-12


def test_maximum_principle_on_corpus():
    for cx, f in corpus()[:12]:
        inner = f.values[cx.interior_vertices]
        assert inner.min() > 0 and inner.max() < cx.k


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), size=st.integers(1, 40))
def test_green_identity_for_arbitrary_fields(seed, size):
    cx, _ = named("pants")
    rng = np.random.default_rng(seed)
    u = rng.normal(size=cx.n_vertices)
    v = rng.normal(size=cx.n_vertices)
    F = rng.choice(cx.n_vertices, size=size, replace=False)
    res = green_identity_residual(u, v, cx, F)
    assert abs(res) <= 1e-10 * (1 + energy(u, cx))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(3, 20), k=st.floats(0.1, 10))
def test_solved_field_identities(seed, n, k):
    rng = np.random.default_rng(seed)
    cx = ring_annulus(n, k)
    cx = cx.with_conductance(rng.uniform(0.1, 10, cx.n_edges))
    f = solve(cx)
    fl = boundary_fluxes(f, cx)
    assert abs(sum(fl)) <= 1e-9 * abs(fl[0])
    assert energy(f, cx) == pytest.approx(k * abs(fl[0]), rel=1e-9)
    # the harmonic field minimizes energy among fields with the same boundary values
    bump = np.zeros(cx.n_vertices)
    bump[cx.interior_vertices] = rng.normal(size=len(cx.interior_vertices)) * 0.1
    assert energy(f.values + bump, cx) >= energy(f, cx) - 1e-12
