"""Polyhedral convex multifunctions, the sum map F = f + G, and sampled ball images."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.spatial import ConvexHull

from . import polyhedra
from .errors import (DomainError, InconclusiveError, InfeasibleGraphError,
                     PreconditionError, UnboundedFiberError)
from .sampling import SamplerSpec, ball_samples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fiber:
    """The polyhedron {y : M y <= h}; ``empty`` is decided by an LP."""

    M: np.ndarray
    h: np.ndarray
    empty: bool

    def contains(self, y, tol=1e-9):
        return not self.empty and bool(np.all(self.M @ y <= self.h + tol))

    def vertices(self):
        if self.empty:
            return np.empty((0, self.M.shape[1]))
        return polyhedra.vertices(self.M, self.h)

    def recession_directions(self):
        return polyhedra.recession_directions(self.M)

    @property
    def bounded(self):
        return not self.recession_directions()


class PolyhedralMultifunction:
    """G : R^n => R^m with graph {(x, y) : A x + B y <= b}.

    Equalities are encoded as pairs of opposite inequality rows.  The graph
    is closed and convex by construction; ``sublinear`` holds iff b = 0.
    """

    def __init__(self, A, B, b, bounding_box=None, name=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        k = self.b.size
        if self.A.shape[0] != k or self.B.shape[0] != k:
            raise DomainError(f"row counts differ: A {self.A.shape}, B {self.B.shape}, b {k}")
        self.name = name or "G"
        self.bounding_box = bounding_box
        if not polyhedra.is_feasible(np.hstack([self.A, self.B]), self.b):
            raise InfeasibleGraphError("graph of G is empty")
        self._recession = None
        self._vertex_maps = None
        self._eq_rows, self._ineq_rows = _split_equalities(self.A, self.B, self.b)

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def sublinear(self):
        return bool(np.all(self.b == 0))

    # constructors for the shapes used by scenarios and tests

    @classmethod
    def linear(cls, M, name=None):
        """The convex process x -> {M x}."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        m, n = M.shape
        eye = np.eye(m)
        return cls(np.vstack([M, -M]), np.vstack([-eye, eye]), np.zeros(2 * m),
                   name=name or "linear")

    @classmethod
    def zero(cls, n, m):
        """x -> {0} in R^m (the single-valued case F = f)."""
        return cls.linear(np.zeros((m, n)), name="zero")

    @classmethod
    def translated_box(cls, M, lower, upper, name=None):
        """x -> M x + [lower, upper] (coordinatewise box)."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        m, _ = M.shape
        eye = np.eye(m)
        A = np.vstack([M, -M])
        B = np.vstack([-eye, eye])
        b = np.concatenate([-np.asarray(lower, float), np.asarray(upper, float)])
        return cls(A, B, b, name=name or "box")

    def graph_contains(self, x, y, tol=1e-9):
        return bool(np.all(self.A @ x + self.B @ y <= self.b + tol))

    def fiber(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = self.b - self.A @ x
        M, hh = self._boxed(self.B, h)
        return Fiber(M, hh, not polyhedra.is_feasible(M, hh))

    def in_domain(self, x):
        return not self.fiber(x).empty

    def _boxed(self, M, h):
        if self.bounding_box is None:
            return M, h
        L = float(self.bounding_box)
        eye = np.eye(self.m)
        return np.vstack([M, eye, -eye]), np.concatenate([h, np.full(2 * self.m, L)])

    def fiber_recession(self):
        """Recession directions shared by every nonempty fiber."""
        if self._recession is None:
            M, _ = self._boxed(self.B, self.b)
            self._recession = polyhedra.recession_directions(M)
        return self._recession

    @property
    def bounded_fibers(self):
        return not self.fiber_recession()

    def dist_point_to_fiber(self, x, v):
        """d(v, G(x)); +inf when G(x) is empty."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        _, d = polyhedra.project(v, self.B, self.b - self.A @ x)
        return d

    def dist_point_to_preimage(self, v, x):
        """d(x, G^{-1}(v)); +inf when the preimage is empty."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        _, d = polyhedra.project(x, self.A, self.b - self.B @ v)
        return d

    # generic interface used by the regularity estimators
    dist_to_fiber = dist_point_to_fiber
    dist_to_preimage = dist_point_to_preimage

    def _maps(self):
        """Affine vertex maps x -> y_S(x) for every nonsingular m-row subset S of B."""
        if self._vertex_maps is None:
            A, B, b = self.A, self.B, self.b
            if self.bounding_box is not None:
                B, b = self._boxed(B, b)
                A = np.vstack([A, np.zeros((2 * self.m, self.n))])
            maps = []
            for rows in itertools.combinations(range(B.shape[0]), self.m):
                rows = list(rows)
                sub = B[rows]
                if abs(np.linalg.det(sub)) < 1e-12:
                    continue
                inv = np.linalg.inv(sub)
                maps.append((inv @ b[rows], -inv @ A[rows]))
            self._vertex_maps = (A, B, b, maps)
        return self._vertex_maps

    def fiber_vertices_many(self, xs, tol=1e-9):
        """Vertices of G(x) for each row of ``xs``: (points, owner index).

        Duplicate vertices (degenerate subsets) are not removed here.
        """
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.fiber_recession():
            raise UnboundedFiberError("fibers are unbounded; configure a bounding box")
        A, B, b, maps = self._maps()
        rhs = b[None, :] - xs @ A.T
        pts, owners = [], []
        for p, q in maps:
            y = p[None, :] + xs @ q.T
            ok = np.all(y @ B.T <= rhs + tol * (1 + np.abs(rhs)), axis=1)
            pts.append(y[ok])
            owners.append(np.nonzero(ok)[0])
        if not pts:
            return np.empty((0, self.m)), np.empty(0, dtype=int)
        return np.vstack(pts), np.concatenate(owners)

    def excess_over(self, x0, xs):
        """max over x in xs of the Hausdorff excess e(G(x), G(x0)), from fiber vertices."""
        ys, _ = self.fiber_vertices_many(xs)
        f0 = self.fiber(x0)
        if f0.empty:
            raise DomainError("x0 is not in dom G")
        worst = 0.0
        for y in polyhedra.dedupe(ys):
            worst = max(worst, polyhedra.project(y, f0.M, f0.h)[1])
        return worst

    def to_dict(self):
        out = {"A": self.A, "B": self.B, "b": self.b}
        if self.bounding_box is not None:
            out["bounding_box"] = self.bounding_box
        return out


def _split_equalities(A, B, b):
    rows = np.hstack([A, B, b[:, None]])
    eq, used = [], set()
    for i, j in itertools.combinations(range(rows.shape[0]), 2):
        if i in used or j in used:
            continue
        if np.allclose(rows[i], -rows[j], atol=1e-14):
            eq.append(i)
            used.update((i, j))
    ineq = [i for i in range(rows.shape[0]) if i not in used]
    return eq, ineq


def usc_radius(G, x0, target, r_max, n=64, seed=0, steps=40):
    """Largest t <= r_max (bisection) with sampled excess of G over G(x0) <= target on B(x0, t)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not G.bounded_fibers:
        raise UnboundedFiberError("u.s.c. radius needs bounded fibers")

    def excess(t):
        return G.excess_over(x0, ball_samples(x0, t, n, seed=seed, boundary_fraction=0.5))

    if not math.isfinite(r_max):
        r_max = 1.0
        while excess(r_max) <= target and r_max < 1e6:
            r_max *= 2.0
        if r_max >= 1e6:
            return math.inf
    if excess(r_max) <= target:
        return r_max
    lo, hi = 0.0, r_max
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if excess(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


class ProductLevelMultifunction:
    """G(x) = {y in R^2 : y1 * y2 = x}; the inverse of the product map.

    Not polyhedral.  Kept for the uniform-regularity counterexample; the
    distances below are exact (quartic stationarity condition).
    """

    name = "product-level"
    n = 1
    m = 2

    def dist_to_fiber(self, x, v):
        x = float(np.atleast_1d(x)[0])
        v1, v2 = (float(c) for c in v)
        if x == 0.0:
            return min(abs(v1), abs(v2))
        roots = np.roots([1.0, -v1, 0.0, v2 * x, -x * x])
        best = math.inf
        for t in roots:
            if abs(t.imag) > 1e-9 * max(1.0, abs(t.real)) or t.real == 0.0:
                continue
            t = t.real
            best = min(best, math.hypot(t - v1, x / t - v2))
        return best

    def dist_to_preimage(self, v, x):
        x = float(np.atleast_1d(x)[0])
        return abs(x - float(v[0]) * float(v[1]))

    def fiber_samples(self, x, n, extent):
        """Points of G(x) with |y1|, |y2| <= extent."""
        x = float(np.atleast_1d(x)[0])
        t = np.linspace(-extent, extent, n)
        if x == 0.0:
            zeros = np.zeros_like(t)
            return np.vstack([np.column_stack([t, zeros]), np.column_stack([zeros, t])])
        t = t[np.abs(t) >= abs(x) / extent]
        return np.column_stack([t, x / t])


class SumMap:
    """F = f + G with f a SmoothMap and G a polyhedral multifunction."""

    def __init__(self, f, G, check_domain=True, n_check=64):
        if f.in_dim != G.n or f.out_dim != G.m:
            raise DomainError(f"dimension mismatch: f is R^{f.in_dim}->R^{f.out_dim}, "
                              f"G is R^{G.n}=>R^{G.m}")
        self.f = f
        self.G = G
        if check_domain and f.radius > 0:
            for x in ball_samples(f.center, f.radius, n_check, boundary_fraction=0.5):
                if not G.in_domain(x):
                    raise PreconditionError(f"domain ball of f is not inside dom G (x={x})")

    @property
    def n(self):
        return self.G.n

    @property
    def m(self):
        return self.G.m

    def dist_to_fiber(self, x, v):
        """d(v, F(x)) = d(v - f(x), G(x))."""
        return self.G.dist_point_to_fiber(x, np.asarray(v, float) - self.f(x))

    def _affine_part(self):
        f = self.f
        if f.lip_jac == 0.0 and f.jac is not None:
            J = np.asarray(f.jac(f.center), dtype=float).reshape(f.out_dim, f.in_dim)
            return J, f(f.center) - J @ f.center
        return None

    def dist_to_preimage(self, v, x, n_starts=3):
        """d(x, F^{-1}(v)).

        Exact projection when f is affine; otherwise a nonlinear least-distance
        problem solved by SLSQP from several starts.  Raises InconclusiveError
        when no start reaches a feasible point (the preimage may be empty).
        """
        v = np.atleast_1d(np.asarray(v, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        G = self.G
        aff = self._affine_part()
        if aff is not None:
            J, c = aff
            _, d = polyhedra.project(x, G.A - G.B @ J, G.b - G.B @ (v - c))
            return d

        def slack(u):
            return G.b - G.A @ u - G.B @ (v - self.f(u))

        eq, ineq = G._eq_rows, G._ineq_rows
        cons = []
        if eq:
            cons.append({"type": "eq", "fun": lambda u: slack(u)[eq]})
        if ineq:
            cons.append({"type": "ineq", "fun": lambda u: slack(u)[ineq]})

        def violation(u):
            s = slack(u)
            return np.concatenate([s[eq], np.minimum(s[ineq], 0.0)])

        starts = [x]
        lsq = least_squares(violation, x, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        starts.append(lsq.x)
        rng = np.random.default_rng(0)
        for _ in range(max(0, n_starts - 2)):
            starts.append(lsq.x + 1e-3 * rng.standard_normal(x.size))
        scale = 1.0 + np.linalg.norm(v) + np.linalg.norm(x)
        best = math.inf
        for u0 in starts:
            res = minimize(lambda u: 0.5 * np.sum((u - x) ** 2), u0,
                           jac=lambda u: u - x, constraints=cons, method="SLSQP",
                           options={"ftol": 1e-14, "maxiter": 500})
            u = res.x
            if np.max(np.abs(violation(u)), initial=0.0) <= 1e-8 * scale:
                best = min(best, float(np.linalg.norm(u - x)))
        if not math.isfinite(best):
            raise InconclusiveError("no feasible preimage point found")
        return best

    def values(self, x):
        """Vertices of F(x) (bounded fibers)."""
        ys, _ = self.G.fiber_vertices_many(np.atleast_2d(x))
        return polyhedra.dedupe(ys) + self.f(x)


@dataclass
class ImageCloud:
    """Sampled image F(B(x0, eps)): ``points[i]`` lies in F(``sources[i]``)."""

    points: np.ndarray
    sources: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]


def _perimeter_points(verts, n, rng):
    """Stratified points along the boundary of a planar polygon."""
    hull = ConvexHull(verts)
    ring = verts[hull.vertices]
    nxt = np.roll(ring, -1, axis=0)
    seg = np.linalg.norm(nxt - ring, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = (np.arange(n) + rng.random(n)) / n * cum[-1]
    e = np.minimum(np.searchsorted(cum, s, side="right") - 1, ring.shape[0] - 1)
    t = ((s - cum[e]) / seg[e])[:, None]
    return (1.0 - t) * ring[e] + t * nxt[e]


def fill_polytope(verts, n, rng):
    """n points of conv(verts): half on the boundary (stratified along the
    perimeter for polygons, along vertex-pair segments otherwise), the rest
    uniform in random simplices of the affine hull's dimension."""
    k = verts.shape[0]
    if k == 1:
        return np.repeat(verts, n, axis=0)
    dim = int(np.linalg.matrix_rank(verts[1:] - verts[0], tol=1e-10))
    n_seg = n // 2 if dim > 1 else n
    if dim == 2 and verts.shape[1] == 2:
        out = [_perimeter_points(verts, n_seg, rng)]
    else:
        pi, pj = np.triu_indices(k, k=1)
        pick = np.arange(n_seg) % pi.size
        rank = np.arange(n_seg) // pi.size
        per = np.bincount(pick, minlength=pi.size)[pick]
        t = ((rank + rng.random(n_seg)) / per)[:, None]
        out = [(1.0 - t) * verts[pi[pick]] + t * verts[pj[pick]]]
    n_simp = n - n_seg
    if n_simp > 0:
        idx = np.argsort(rng.random((n_simp, k)), axis=1)[:, : dim + 1]
        w = rng.dirichlet(np.ones(dim + 1), size=n_simp)
        out.append(np.einsum("pk,pkd->pd", w, verts[idx]))
    return np.vstack(out)


def sum_image_of_ball(Fmap, x0, eps, sampler=None):
    """Seeded sample of the union of f(x) + G(x) over x in B(x0, eps).

    Each ball sample contributes f(x) + vertices of G(x), plus ``n_y`` points
    filling G(x) (see ``fill_polytope``).  Near-duplicate points are merged.
    """
    sampler = sampler or SamplerSpec()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    f, G = Fmap.f, Fmap.G
    if np.linalg.norm(x0 - f.center) + eps > f.radius * (1 + 1e-12):
        raise DomainError(f"B(x0, {eps}) is not inside the domain ball of f")
    if sampler.n_y > 0 and not G.bounded_fibers and G.bounding_box is None:
        raise UnboundedFiberError("interior fiber samples need bounded fibers or a bounding box")
    xs = ball_samples(x0, eps, sampler.n_x, seed=sampler.seed,
                      boundary_fraction=sampler.boundary_fraction)
    fx = f.eval_many(xs)
    ys, owner = G.fiber_vertices_many(xs)
    pts = [ys + fx[owner]]
    srcs = [owner]
    if sampler.n_y > 0:
        rng = np.random.default_rng([sampler.seed, 1])
        order = np.argsort(owner, kind="stable")
        ys_sorted, own_sorted = ys[order], owner[order]
        bounds = np.searchsorted(own_sorted, np.arange(xs.shape[0] + 1))
        for i in range(xs.shape[0]):
            verts = polyhedra.dedupe(ys_sorted[bounds[i]:bounds[i + 1]])
            if verts.shape[0] == 0:
                continue
            pts.append(fill_polytope(verts, sampler.n_y, rng) + fx[i])
            srcs.append(np.full(sampler.n_y, i))
    points = np.vstack(pts)
    src_idx = np.concatenate(srcs)
    _, keep = np.unique(np.round(points, 12), axis=0, return_index=True)
    keep = np.sort(keep)
    meta = {"n_x": int(xs.shape[0]), "n_y": int(sampler.n_y), "seed": int(sampler.seed),
            "eps": float(eps), "n_points": int(keep.size)}
    return ImageCloud(points[keep], xs[src_idx[keep]], meta)
