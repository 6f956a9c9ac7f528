"""Sampled convexity checks for images F(B(x0, eps)).

The convexity defect is the largest distance from a midpoint of two cloud
points back to the cloud.  A convex set sampled at resolution h has defect
O(h); a non-convex one keeps a positive defect as sampling refines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from .errors import InconclusiveError, PreconditionError
from .extreal import to_jsonable
from .multifunction import ImageCloud, sum_image_of_ball
from .sampling import SamplerSpec, pair_indices, sphere_directions

MAX_EXTREME = 200


@dataclass(frozen=True)
class DefectReport:
    eps: float | None
    defect: float
    witness_pair: dict | None
    n_points: int
    seed: int
    resolution: float = 0.0
    diameter: float = 0.0
    n_pairs: int = 0

    @property
    def threshold(self):
        return pass_threshold(self.resolution, self.diameter)

    @property
    def passed(self):
        return self.defect <= self.threshold

    def to_dict(self):
        return to_jsonable({
            "eps": self.eps, "defect": self.defect, "threshold": self.threshold,
            "passed": self.passed, "resolution": self.resolution,
            "diameter": self.diameter, "n_points": self.n_points,
            "n_pairs": self.n_pairs, "seed": self.seed,
            "witness_pair": self.witness_pair,
        })


def pass_threshold(resolution, diameter):
    return max(2.0 * resolution, 0.02 * diameter)


def _points(cloud):
    pts = cloud.points if isinstance(cloud, ImageCloud) else np.asarray(cloud, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[0] == 0:
        raise PreconditionError("cloud is empty")
    _, keep = np.unique(np.round(pts, 12), axis=0, return_index=True)
    return pts[np.sort(keep)]


def _hull(pts):
    if pts.shape[1] not in (2, 3) or pts.shape[0] <= pts.shape[1]:
        return None
    try:
        return ConvexHull(pts, qhull_options="QJ")
    except QhullError:
        return None


def extreme_indices(pts):
    """Indices of extreme points: hull vertices in dim 2-3, directional extremes otherwise."""
    n, dim = pts.shape
    hull = _hull(pts)
    if hull is not None:
        idx = np.unique(hull.vertices)
    else:
        dirs = sphere_directions(dim, 64) if dim > 1 else np.array([[1.0], [-1.0]])
        idx = np.unique(np.argmax(pts @ dirs.T, axis=0))
    if idx.size > MAX_EXTREME:
        idx = idx[np.linspace(0, idx.size - 1, MAX_EXTREME).astype(int)]
    return idx


def diameter(pts):
    idx = extreme_indices(pts)
    ext = pts[idx]
    if pts.shape[0] <= 2000:
        ext = pts
    return float(pdist(ext).max()) if ext.shape[0] > 1 else 0.0


def resolution(pts, tree=None):
    """Median nearest-neighbour spacing of the cloud."""
    if pts.shape[0] < 2:
        return 0.0
    tree = tree or cKDTree(pts)
    d, _ = tree.query(pts, k=2)
    return float(np.median(d[:, 1]))


def convexity_defect(cloud, probe=None, eps=None):
    """Max over sampled pairs of the distance from their midpoint to the cloud.

    Pairs are all pairs of extreme points plus random pairs up to the budget
    (every pair when the cloud is small enough).
    """
    probe = probe or SamplerSpec()
    pts = _points(cloud)
    n = pts.shape[0]
    if n == 1:
        return DefectReport(eps, 0.0, None, 1, probe.seed)
    tree = cKDTree(pts)
    res = resolution(pts, tree)
    diam = diameter(pts)
    rng = np.random.default_rng([probe.seed, 3])
    ext = extreme_indices(pts)
    ei, ej = np.triu_indices(ext.size, k=1)
    budget = max(0, probe.pair_budget - ei.size)
    ri, rj = pair_indices(n, budget, rng)
    i = np.concatenate([ext[ei], ri])
    j = np.concatenate([ext[ej], rj])
    mids = 0.5 * (pts[i] + pts[j])
    dist, near = tree.query(mids)
    k = int(np.argmax(dist))
    defect = float(dist[k])
    witness = None
    if defect > 0.0:
        witness = {"y1": pts[i[k]].tolist(), "y2": pts[j[k]].tolist(),
                   "midpoint": mids[k].tolist(), "nearest": pts[near[k]].tolist(),
                   "nearest_distance": defect}
    return DefectReport(eps, defect, witness, n, probe.seed, res, diam, int(i.size))


def hull_gap(cloud, n_probe=2000, seed=0):
    """Largest distance from sampled points of the convex hull boundary to the cloud.

    Secondary oracle for dimensions 1-3.
    """
    pts = _points(cloud)
    dim = pts.shape[1]
    tree = cKDTree(pts)
    rng = np.random.default_rng(seed)
    if dim == 1:
        lo, hi = pts.min(), pts.max()
        probes = rng.uniform(lo, hi, size=(n_probe, 1))
    else:
        hull = _hull(pts)
        if hull is None:
            raise PreconditionError("hull cross-check needs dimension 2 or 3")
        facets = hull.simplices[rng.integers(0, hull.simplices.shape[0], n_probe)]
        w = rng.dirichlet(np.ones(dim), size=n_probe)
        probes = np.einsum("pk,pkd->pd", w, pts[facets])
    d, _ = tree.query(probes)
    return float(d.max())


def defect_curve(Fmap, x0, eps_list, sampler=None):
    """One DefectReport per radius; same sampler and seed for all radii."""
    sampler = sampler or SamplerSpec()
    reports = []
    for eps in eps_list:
        cloud = sum_image_of_ball(Fmap, x0, eps, sampler)
        reports.append(convexity_defect(cloud, sampler, eps=float(eps)))
    return reports


def on_hull_boundary(pts, y, rtol=1e-3):
    pts = _points(pts)
    diam = diameter(pts)
    tol = rtol * max(diam, 1e-12)
    if pts.shape[1] == 1:
        return bool(abs(y[0] - pts.min()) <= tol or abs(y[0] - pts.max()) <= tol)
    hull = _hull(pts)
    if hull is None:
        raise PreconditionError("boundary test needs a full-dimensional hull")
    return bool(np.max(hull.equations[:, :-1] @ y + hull.equations[:, -1]) >= -tol)


def boundary_preimage_check(Fmap, x0, eps, y_boundary, cloud=None, sampler=None,
                            n_starts=8, tol=1e-7):
    """True iff every recovered preimage of a hull-boundary point lies on the sphere.

    Preimages are re-solved by local search (SLSQP on d(y - f(x), G(x))^2 over
    the ball) started from the cloud points nearest to ``y_boundary``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y = np.atleast_1d(np.asarray(y_boundary, dtype=float))
    if cloud is None:
        cloud = sum_image_of_ball(Fmap, x0, eps, sampler or SamplerSpec())
    if not on_hull_boundary(cloud.points, y):
        raise PreconditionError("y is not on the boundary of the sampled image hull")
    tree = cKDTree(cloud.points)
    _, idx = tree.query(y, k=min(n_starts, len(cloud)))
    starts = cloud.sources[np.atleast_1d(idx)]

    def gap(x):
        return Fmap.dist_to_fiber(x, y) ** 2

    cons = [{"type": "ineq", "fun": lambda x: eps * eps - np.sum((x - x0) ** 2),
             "jac": lambda x: -2.0 * (x - x0)}]
    found = []
    for x_start in starts:
        res = minimize(gap, x_start, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-18, "maxiter": 300})
        x = res.x
        if np.linalg.norm(x - x0) <= eps * (1 + 1e-9) and math.sqrt(max(gap(x), 0.0)) <= tol:
            found.append(x)
    if not found:
        raise InconclusiveError("no preimage of y recovered in the ball")
    return all(np.linalg.norm(x - x0) >= eps * (1 - 1e-3) for x in found)
