"""Localized set-valued minimization: C-efficient pairs and Lagrangian scalarization."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, cKDTree

from . import polyhedra
from .certifier import continuity_radius
from .errors import (DomainError, InconclusiveError, PreconditionError,
                     ScalarizationError)
from .extreal import to_jsonable
from .multifunction import sum_image_of_ball, usc_radius
from .sampling import SamplerSpec, ball_samples

log = logging.getLogger(__name__)

DOMINANCE_TOL = 1e-6


class OrderingCone:
    """Finitely generated cone C = cone(generators), required closed, convex, pointed, proper.

    ``dual_generators`` span C+; they are derived when omitted and verified
    either way.
    """

    def __init__(self, generators, dual_generators=None, tol=1e-12):
        gens = np.atleast_2d(np.asarray(generators, dtype=float))
        self.generators = gens[np.linalg.norm(gens, axis=1) > 0.0]
        k, m = self.generators.shape
        if k == 0:
            raise PreconditionError("cone must contain a nonzero vector")
        if np.linalg.matrix_rank(self.generators) < m:
            raise PreconditionError("cone must be full-dimensional (solid)")
        for g in self.generators:
            if self.contains(-g, tol=1e-10):
                raise PreconditionError("cone is not pointed")
        if dual_generators is None:
            dual_generators = _dual_rays(self.generators)
        self.dual_generators = np.atleast_2d(np.asarray(dual_generators, dtype=float))
        if np.any(self.dual_generators @ self.generators.T < -1e-10):
            raise PreconditionError("dual generators are not in C+")

    @property
    def dim(self):
        return self.generators.shape[1]

    @classmethod
    def orthant(cls, m):
        return cls(np.eye(m), np.eye(m))

    def contains(self, d, tol=DOMINANCE_TOL):
        """LP membership: inf-norm distance from d to C is at most ``tol``."""
        d = np.atleast_1d(np.asarray(d, dtype=float))
        k, m = self.generators.shape
        gt = self.generators.T
        # variables (lambda, t): minimize t, -t <= G^T lambda - d <= t
        c = np.zeros(k + 1)
        c[-1] = 1.0
        ones = np.ones((m, 1))
        a_ub = np.vstack([np.hstack([gt, -ones]), np.hstack([-gt, -ones])])
        b_ub = np.concatenate([d, -d])
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * k + [(0, None)],
                      method="highs")
        return res.status == 0 and res.fun <= tol

    def dual_contains(self, ystar, tol=1e-8):
        return bool(np.all(self.generators @ ystar >= -tol))

    def to_dict(self):
        return {"generators": self.generators, "dual_generators": self.dual_generators}


def _dual_rays(gens):
    k, m = gens.shape
    if m == 1:
        return np.array([[np.sign(gens[0, 0])]])
    rays = []
    for rows in itertools.combinations(range(k), m - 1):
        ns = null_space(gens[list(rows)])
        if ns.shape[1] != 1:
            continue
        n = ns[:, 0]
        for cand in (n, -n):
            if np.all(gens @ cand >= -1e-12):
                rays.append(cand / np.linalg.norm(cand))
    if not rays:
        raise PreconditionError("could not derive the dual cone")
    return polyhedra.dedupe(np.array(rays))


@dataclass
class EfficientPair:
    x_eps: np.ndarray
    y_eps: np.ndarray
    eps: float
    scalarizer: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def to_dict(self):
        return to_jsonable({"x_eps": self.x_eps, "y_eps": self.y_eps, "eps": self.eps,
                            "scalarizer": self.scalarizer, **self.info})


@dataclass(frozen=True)
class BoundedNeighborhood:
    """W = B(q(x0), eta) + B(Q(x0), eta), valid on B(x0, radius)."""

    center: np.ndarray
    core_vertices: np.ndarray
    eta: float
    radius: float
    sampled_excess: float

    def contains(self, y, tol=1e-9):
        d = polyhedra.project(np.asarray(y, float) - self.center,
                              *_hull_rows(self.core_vertices))[1]
        return d <= 2.0 * self.eta + tol

    def to_dict(self):
        return to_jsonable({"center": self.center, "core_vertices": self.core_vertices,
                            "eta": self.eta, "radius": self.radius,
                            "sampled_excess": self.sampled_excess})


def _hull_rows(verts):
    """Inequality description (M, h) of conv(verts); verts must span their dimension."""
    m = verts.shape[1]
    if verts.shape[0] == 1:
        eye = np.eye(m)
        return np.vstack([eye, -eye]), np.concatenate([verts[0], -verts[0]])
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.array([verts.max(), -verts.min()])
    hull = ConvexHull(verts, qhull_options="QJ")
    return hull.equations[:, :-1], -hull.equations[:, -1]


def local_boundedness_check(q, Q, x0, eta=0.1, r_max=None, n=256):
    """Radius r_Phi and bounded W with Phi(x) inside W for sampled x in B(x0, r_Phi)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not Q.bounded_fibers:
        raise PreconditionError("Q(x0) is unbounded")
    fib = Q.fiber(x0)
    if fib.empty:
        raise DomainError("x0 is not in dom Q")
    r_max = q.radius - float(np.linalg.norm(x0 - q.center)) if r_max is None else r_max
    r_q, _ = continuity_radius(q, x0, eta, r_max)
    r_Q = usc_radius(Q, x0, eta, r_max)
    radius = min(r_q, r_Q)
    core = fib.vertices()
    qx0 = q(x0)
    xs = ball_samples(x0, radius, n, boundary_fraction=0.5)
    ys, owner = Q.fiber_vertices_many(xs)
    ys = ys + q.eval_many(xs)[owner]
    excess = max(polyhedra.project(y - qx0, fib.M, fib.h)[1] for y in ys)
    if excess > 2.0 * eta + 1e-9:
        raise InconclusiveError(f"sampled Phi(x) leaves W (excess {excess:.3g})")
    return BoundedNeighborhood(qx0, core, eta, radius, excess)


def _exact_front(z):
    """Exact nondominated indices in dual coordinates, skyline sweep in order of sum(z)."""
    order = np.lexsort(np.vstack([z.T[::-1], z.sum(axis=1)]))
    front = []
    fz = np.empty((0, z.shape[1]))
    for i in order:
        if fz.shape[0] and np.any(np.all(fz <= z[i], axis=1) & np.any(fz != z[i], axis=1)):
            continue
        front.append(i)
        fz = np.vstack([fz, z[i]])
    return np.array(front, dtype=int)


def pareto_minimal(points, cone, tol=DOMINANCE_TOL, chunk=256):
    """Mask of C-minimal points: y is dropped when some y' != y has y - y' in C (within tol).

    Membership uses the dual description: d in C iff <y*, d> >= 0 for all dual
    generators, the same set as the LP test for a closed polyhedral cone.
    Points dominated exactly are dropped first; the tolerant test runs on the rest.
    """
    pts = np.asarray(points, dtype=float)
    z = pts @ cone.dual_generators.T
    n = pts.shape[0]
    cand = _exact_front(z)

    def run(t):
        keep = np.zeros(n, dtype=bool)
        for s in range(0, cand.size, chunk):
            idx = cand[s:s + chunk]
            dom = np.all(z[idx, None, :] - z[None, :, :] >= -t, axis=2)
            same = np.all(np.abs(pts[idx, None, :] - pts[None, :, :]) <= 1e-12, axis=2)
            keep[idx] = ~np.any(dom & ~same, axis=1)
        return keep

    keep = run(tol)
    if not np.any(keep):
        keep = run(0.0)
    return keep


def dominance_audit(y_eps, points, cone, tol=DOMINANCE_TOL):
    """Cloud points y != y_eps with y_eps - y in C (LP membership); empty means efficient."""
    pts = np.asarray(points, dtype=float)
    d = y_eps[None, :] - pts
    screen = np.all(d @ cone.dual_generators.T >= -1e-3, axis=1)
    screen &= np.linalg.norm(d, axis=1) > 1e-12
    return [pts[i] for i in np.nonzero(screen)[0] if cone.contains(d[i], tol)]


def _select(points, keep, cone):
    """The undominated point minimizing <sum of dual generators, y>, ties lexicographic."""
    idx = np.nonzero(keep)[0]
    w = cone.dual_generators.sum(axis=0)
    score = points[idx] @ w
    best = score.min()
    tie = idx[score <= best + 1e-12 * (1.0 + abs(best))]
    order = np.lexsort(points[tie].T[::-1])
    return int(tie[order[0]])


def find_efficient_pair(Phi, x0, eps, cone, sampler=None, cloud=None, tol=1e-8):
    """A C-efficient pair of the localized problem over B(x0, eps) from the sampled image.

    The preimage of the chosen minimal point is re-solved by local search from
    the cloud sources nearest to it, and must lie on the sphere of radius eps.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if cloud is None:
        cloud = sum_image_of_ball(Phi, x0, eps, sampler or SamplerSpec())
    if len(cloud) == 0:
        raise PreconditionError("empty image cloud")
    keep = pareto_minimal(cloud.points, cone)
    k = _select(cloud.points, keep, cone)
    y = cloud.points[k]
    tree = cKDTree(cloud.points)
    _, near = tree.query(y, k=min(8, len(cloud)))
    starts = np.vstack([cloud.sources[k], cloud.sources[np.atleast_1d(near)]])

    def gap(x):
        return Phi.dist_to_fiber(x, y) ** 2

    cons = [{"type": "ineq", "fun": lambda x: eps * eps - np.sum((x - x0) ** 2),
             "jac": lambda x: -2.0 * (x - x0)}]
    found = []
    for s in starts:
        if gap(s) <= tol * tol:
            found.append(s)
            continue
        res = minimize(gap, s, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-18, "maxiter": 300})
        if np.linalg.norm(res.x - x0) <= eps * (1 + 1e-9) and gap(res.x) <= tol * tol:
            found.append(res.x)
    if not found:
        raise InconclusiveError("no preimage of the efficient point recovered")
    x_eps = max(found, key=lambda x: float(np.linalg.norm(x - x0)))
    ratio = float(np.linalg.norm(x_eps - x0)) / eps
    info = {"n_minimal": int(keep.sum()), "n_points": len(cloud),
            "boundary_ratio": ratio}
    if ratio < 1 - 1e-6:
        raise InconclusiveError(f"efficient preimage is interior (|x - x0|/eps = {ratio:.6g})")
    return EfficientPair(x_eps, y.copy(), float(eps), None, info)


def lagrangian(q, Q, x, ystar):
    """<y*, q(x)> + min over y in Q(x) of <y*, y>; -inf when the inner LP is unbounded."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ystar = np.asarray(ystar, dtype=float)
    res = linprog(ystar, A_ub=Q.B, b_ub=Q.b - Q.A @ x, bounds=[(None, None)] * Q.m,
                  method="highs")
    if res.status == 2:
        raise DomainError(f"Q({x}) is empty")
    if res.status == 3:
        log.warning("Lagrangian is -inf at x=%s", x)
        return -math.inf
    if res.status != 0:
        raise InconclusiveError(f"inner LP failed: {res.message}")
    return float(ystar @ q(x) + res.fun)


def lagrangian_many(q, Q, xs, ystar):
    """Vectorized Lagrangian over bounded fibers (minimum over fiber vertices)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys, owner = Q.fiber_vertices_many(xs)
    inner = np.full(xs.shape[0], np.inf)
    np.minimum.at(inner, owner, ys @ ystar)
    if np.any(np.isinf(inner)):
        raise DomainError("some Q(x) is empty")
    return q.eval_many(xs) @ ystar + inner


def separating_functional(y_eps, points, cone, exclude=1e-9):
    """Unit y* with <y*, y - y_eps> >= 0 on the cloud and <y*, g> >= 0 on C.

    Max-margin separation of normalized directions (least-distance QP through
    y_eps); None when the directions admit no separating half-space.
    """
    d = np.asarray(points, dtype=float) - y_eps[None, :]
    nrm = np.linalg.norm(d, axis=1)
    scale = max(float(nrm.max(initial=0.0)), 1e-300)
    use = nrm > exclude * scale
    dirs = d[use] / nrm[use, None]
    gens = cone.generators / np.linalg.norm(cone.generators, axis=1, keepdims=True)
    rows = np.vstack([dirs, gens])
    w = polyhedra.least_distance(rows, np.ones(rows.shape[0]))
    if w is None:
        return None, rows, np.nonzero(use)[0]
    return w / np.linalg.norm(w), rows, np.nonzero(use)[0]


def lagrangian_minimality(q, Q, x0, eps, x_eps, ystar, n=10_000, seed=0, rtol=1e-4):
    """Grid audit of L(x, y*) >= L(x_eps, y*) - rtol * range over B(x0, eps)."""
    xs = ball_samples(x0, eps, n, seed=seed)
    vals = lagrangian_many(q, Q, xs, ystar)
    ref = float(lagrangian_many(q, Q, np.atleast_2d(x_eps), ystar)[0])
    span = float(vals.max() - vals.min())
    slack = vals - ref
    k = int(np.argmin(slack))
    tol = rtol * span
    return {"passed": bool(slack[k] >= -tol), "min_gap": float(slack[k]),
            "tolerance": tol, "range": span, "worst_x": xs[k].tolist(),
            "n_grid": int(xs.shape[0]), "L_at_x_eps": ref}


def scalarize(pair, Phi, cone, cloud, x0, grid_n=10_000, rtol=1e-4):
    """Scalarizer y* in C+ \\ {0}, unit norm, for which x_eps minimizes L(., y*) on the grid."""
    y_eps = np.asarray(pair.y_eps, dtype=float)
    ystar, rows, used = separating_functional(y_eps, cloud.points, cone)
    if ystar is None:
        # locate the worst offender with a max-min LP over the box |w| <= 1
        k, m = rows.shape
        res = linprog(np.r_[np.zeros(m), -1.0], A_ub=np.hstack([-rows, np.ones((k, 1))]),
                      b_ub=np.zeros(k), bounds=[(-1, 1)] * m + [(None, None)], method="highs")
        worst = int(np.argmin(rows[: used.size] @ res.x[:m])) if used.size else 0
        j = used[worst] if used.size else 0
        raise ScalarizationError("image is not separable from y_eps - C",
                                 x=cloud.sources[j].tolist(), y=cloud.points[j].tolist())
    if not cone.dual_contains(ystar):
        raise ScalarizationError("separating functional is not in C+")
    audit = lagrangian_minimality(Phi.f, Phi.G, x0, pair.eps, pair.x_eps, ystar,
                                  n=grid_n, rtol=rtol)
    if not audit["passed"]:
        raise ScalarizationError("x_eps does not minimize the Lagrangian on the grid",
                                 x=audit["worst_x"])
    pair.scalarizer = ystar
    pair.info["lagrangian_audit"] = audit
    return ystar
