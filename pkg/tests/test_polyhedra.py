import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexball import polyhedra


def kkt_nnls_ok(a, b, x, tol=1e-8):
    g = a.T @ (a @ x - b)
    scale = 1.0 + np.abs(a).max() * (np.abs(b).max() + np.abs(a).max() * np.abs(x).max())
    return (np.all(x >= 0)
            and np.all(g >= -tol * scale)
            and np.all(np.abs(g[x > 1e-10]) <= tol * scale))


@given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_nnls_kkt(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    x, _ = polyhedra.nnls(a, b)
    assert kkt_nnls_ok(a, b, x)


def random_polytope(rng, dim, k):
    m = rng.normal(size=(k, dim))
    h = rng.uniform(0.2, 1.0, size=k)  # contains the origin
    return m, h


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_projection_variational_inequality(dim, seed):
    rng = np.random.default_rng(seed)
    m, h = random_polytope(rng, dim, 3 * dim)
    v = rng.normal(scale=3.0, size=dim)
    z, d = polyhedra.project(v, m, h)
    assert np.all(m @ z <= h + 1e-8)
    assert d == pytest.approx(np.linalg.norm(v - z))
    # <v - z, w - z> <= 0 for feasible w
    w = rng.normal(size=(2000, dim))
    w = w[np.all(w @ m.T <= h, axis=1)]
    assert np.all((w - z) @ (v - z) <= 1e-8 * (1 + np.linalg.norm(v)))


def test_projection_dense_grid_2d(rng):
    for _ in range(5):
        m, h = random_polytope(rng, 2, 5)
        m = np.vstack([m, np.eye(2), -np.eye(2)])
        h = np.concatenate([h, np.full(4, 3.0)])
        v = rng.normal(scale=2.0, size=2)
        z, d = polyhedra.project(v, m, h)

        def brute(lo, hi, n):
            gx = np.linspace(lo[0], hi[0], n)
            gy = np.linspace(lo[1], hi[1], n)
            xx, yy = np.meshgrid(gx, gy)
            pts = np.column_stack([xx.ravel(), yy.ravel()])
            pts = pts[np.all(pts @ m.T <= h, axis=1)]
            return np.min(np.linalg.norm(pts - v, axis=1))

        coarse = brute((-3, -3), (3, 3), 1201)
        assert d <= coarse + 1e-12
        assert coarse - d <= 0.05
        fine = brute(z - 0.01, z + 0.01, 2001)
        assert abs(fine - d) <= 1e-4


def test_projection_inside_and_empty():
    m = np.array([[1.0, 0.0], [-1.0, 0.0]])
    z, d = polyhedra.project([0.5, 3.0], m, np.array([1.0, 0.0]))
    assert d == 0.0 and np.array_equal(z, [0.5, 3.0])
    z, d = polyhedra.project([0.0, 0.0], m, np.array([-1.0, 0.0]))
    assert z is None and math.isinf(d)


def test_least_distance_infeasible():
    g = np.array([[1.0], [-1.0]])
    assert polyhedra.least_distance(g, np.array([1.0, 1.0])) is None
    w = polyhedra.least_distance(g, np.array([1.0, -3.0]))
    assert w == pytest.approx([1.0])


def test_vertices_and_recession():
    eye = np.eye(2)
    m = np.vstack([eye, -eye])
    v = polyhedra.vertices(m, np.array([1.0, 1.0, 0.0, 0.0]))
    assert {tuple(p) for p in np.round(v, 12)} == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert polyhedra.recession_directions(m) == []
    rays = polyhedra.recession_directions(np.array([[-1.0, 0.0], [0.0, -1.0]]))
    assert len(rays) >= 2 and all(np.all(r >= -1e-12) for r in rays)


def test_feasibility():
    assert polyhedra.is_feasible(np.array([[1.0]]), np.array([0.0]))
    assert not polyhedra.is_feasible(np.array([[1.0], [-1.0]]), np.array([-1.0, 0.0]))
    p = polyhedra.feasible_point(np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
    assert abs(p[0]) <= 1.0
