"""Metric regularity moduli: sampled estimates, set-uniform verification,
inner norms of convex processes and the Lipschitz perturbation bound.

Any object exposing ``dist_to_fiber(x, v)`` and ``dist_to_preimage(v, x)``
can be checked here: polyhedral maps, sum maps and the product-level example.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import polyhedra
from .errors import (DomainError, InconclusiveError, NoCertificateError,
                     PreconditionError)
from .extreal import INF, reciprocal, to_jsonable
from .sampling import (SamplerSpec, ball_samples, inner_norm_direction_count,
                       random_ball, random_sphere, sphere_directions)

KAPPA_SAFETY = 1.25
DEN_ZERO = 1e-12
NUM_ZERO = 1e-9
REGULARITY_SAMPLER = SamplerSpec(seed=0, n_x=16, n_y=12)


@dataclass(frozen=True)
class RegularityCertificate:
    kappa: float
    delta: float
    zeta: float
    kind: str  # analytic | sampled | refuted
    witness: dict | None = None
    samples: int = 0
    seed: int | None = None
    max_ratio: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.kind not in ("analytic", "sampled", "refuted"):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.kind == "refuted":
            if self.witness is None:
                raise ValueError("refuted certificate needs a witness")
            r = self.witness["ratio"]
            if not (r > self.kappa or math.isinf(r)):
                raise ValueError("witness ratio does not exceed kappa")

    @property
    def regular(self):
        return self.kind != "refuted" and math.isfinite(self.kappa)

    def to_dict(self):
        out = {"kappa": self.kappa, "delta": self.delta, "zeta": self.zeta,
               "kind": self.kind, "samples": self.samples, "seed": self.seed}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.max_ratio is not None:
            out["max_ratio"] = self.max_ratio
        if self.note:
            out["note"] = self.note
        return to_jsonable(out)


def regularity_ratio(G, x, v):
    """d(x, G^{-1}(v)) / d(v, G(x)), or None for a 0/0 pair.

    A vanishing denominator with a numerator above 1e-9 counts as +inf.
    """
    num = G.dist_to_preimage(v, x)
    den = G.dist_to_fiber(x, v)
    if den < DEN_ZERO:
        return INF if num > NUM_ZERO else None
    return num / den


def _scan(G, pairs):
    """Evaluate ratios over (x, v) pairs; returns (max ratio, witness, count)."""
    best, witness, count = -INF, None, 0
    for x, v in pairs:
        try:
            r = regularity_ratio(G, x, v)
        except InconclusiveError:
            continue
        if r is None:
            continue
        count += 1
        if r > best:
            best = r
            witness = {"x": np.atleast_1d(x).tolist(), "v": np.atleast_1d(v).tolist(),
                       "ratio": r}
    return best, witness, count


def _grid_pairs(xbar, delta, vbar, zeta, sampler):
    n_v = sampler.n_y if sampler.n_y > 0 else sampler.n_x
    xs = ball_samples(xbar, delta, sampler.n_x, seed=sampler.seed)
    vs = ball_samples(vbar, zeta, n_v, seed=sampler.seed + 1)
    return [(x, v) for x in xs for v in vs]


def estimate_regat(G, xbar, ybar, delta, zeta, grid=None, pairs=None):
    """Sampled sup of the regularity ratio over B(xbar, delta) x B(ybar, zeta).

    The sup is a lower bound on the true modulus.  An infinite ratio yields a
    refuted certificate whose witness shows that no finite kappa works.
    ``pairs`` replaces the grid by explicit (x, v) samples from that set.
    """
    grid = grid or REGULARITY_SAMPLER
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    if G.dist_to_fiber(xbar, ybar) > 1e-8:
        raise PreconditionError("(xbar, ybar) is not in the graph")
    if pairs is None:
        pairs = _grid_pairs(xbar, delta, ybar, zeta, grid)
    best, witness, count = _scan(G, pairs)
    if count == 0:
        raise InconclusiveError("sampler produced no valid ratios")
    if math.isinf(best):
        return RegularityCertificate(INF, delta, zeta, "refuted", witness, count,
                                     grid.seed, best)
    return RegularityCertificate(best, delta, zeta, "sampled", witness, count,
                                 grid.seed, best)


def fiber_points(G, xbar, sampler):
    """Points of G(xbar) used as anchors of the zeta-enlargement."""
    if hasattr(G, "fiber_samples"):
        extent = sampler.bounding_box or 2.0
        return G.fiber_samples(xbar, max(8, sampler.n_y or 16), extent)
    fib = G.fiber(xbar)
    if fib.empty:
        raise DomainError("xbar is not in dom G")
    if not G.bounded_fibers and sampler.bounding_box is None and G.bounding_box is None:
        # unbounded fiber: vertices plus a few steps along recession rays
        verts = fib.vertices()
        if verts.shape[0] == 0:
            verts = polyhedra.feasible_point(fib.M, fib.h)[None, :]
        rays = G.fiber_recession()
        steps = [verts]
        for d in rays:
            for t in (0.5, 1.0, 2.0):
                steps.append(verts + t * d)
        return np.vstack(steps)
    if sampler.bounding_box is not None and G.bounding_box is None:
        L = float(sampler.bounding_box)
        eye = np.eye(G.m)
        verts = polyhedra.vertices(np.vstack([fib.M, eye, -eye]),
                                   np.concatenate([fib.h, np.full(2 * G.m, L)]))
    else:
        verts = fib.vertices()
    rng = np.random.default_rng([sampler.seed, 7])
    n_in = max(0, sampler.n_y)
    if verts.shape[0] > 1 and n_in > 0:
        inner = rng.dirichlet(np.ones(verts.shape[0]), size=n_in) @ verts
        verts = np.vstack([verts, inner])
    return verts


def verify_reg_for_set(G, xbar, kappa, delta, zeta, sampler=None, candidates=None):
    """Check d(x, G^{-1}(v)) <= kappa d(v, G(x)) for x near xbar and v near all of G(xbar).

    ``candidates`` are extra (x, v) pairs checked alongside the samples.
    Returns a sampled certificate for ``kappa`` or a refuted one with the
    worst violating pair.
    """
    sampler = sampler or REGULARITY_SAMPLER
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    anchors = fiber_points(G, xbar, sampler)
    rng = np.random.default_rng([sampler.seed, 11])
    per = max(2, sampler.n_y or 8)
    vs = [anchors]
    if zeta > 0:
        for a in anchors:
            vs.append(random_ball(rng, a, zeta, per // 2))
            vs.append(random_sphere(rng, a, zeta, per - per // 2))
    vs = np.vstack(vs)
    xs = ball_samples(xbar, delta, sampler.n_x, seed=sampler.seed)
    pairs = []
    for x, v in candidates or ():
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if np.linalg.norm(x - xbar) > delta * (1 + 1e-12):
            raise PreconditionError(f"candidate x={x} outside B(xbar, delta)")
        if G.dist_to_fiber(xbar, v) > zeta * (1 + 1e-12):
            raise PreconditionError(f"candidate v={v} outside the zeta-enlargement")
        pairs.append((x, v))
    pairs += [(x, v) for x in xs for v in vs]
    best, witness, count = _scan(G, pairs)
    if count == 0:
        raise InconclusiveError("sampler produced no valid ratios")
    if best > kappa * (1 + 1e-9):
        return RegularityCertificate(kappa, delta, zeta, "refuted", witness, count,
                                     sampler.seed, best)
    return RegularityCertificate(kappa, delta, zeta, "sampled", None, count,
                                 sampler.seed, best)


def product_level_witness(kappa, delta, zeta, margin=1.0):
    """Violating pair (x_delta, v) for G = inverse of (y1, y2) -> y1 y2 at xbar = 0.

    x_delta > 0 is small enough that G(x_delta) lies in the zeta-enlargement of
    G(0) (x_delta <= zeta^2 / 2) and inside B(0, delta); v = (v1, zeta/2) with
    v1 = 2 (kappa zeta + x_delta) / zeta + margin.
    """
    x_delta = min(0.5 * delta, 0.5 * zeta * zeta)
    v1 = 2.0 * (kappa * zeta + x_delta) / zeta + margin
    return np.array([x_delta]), np.array([v1, 0.5 * zeta])


def refute_product_level(G, kappas=(0.5, 1.0, 2.0), deltas=(0.1, 0.5), zetas=(0.1, 0.5),
                         sampler=None, margin=1.0):
    """Check every (kappa, delta, zeta) with the explicit witness as a candidate pair.

    Returns one certificate per triple; the map is refuted when all of them are.
    """
    sampler = sampler or SamplerSpec(seed=0, n_x=4, n_y=4, bounding_box=2.0)
    out = []
    for kappa in kappas:
        for delta in deltas:
            for zeta in zetas:
                x, v = product_level_witness(kappa, delta, zeta, margin)
                out.append(verify_reg_for_set(G, np.zeros(1), kappa, delta, zeta, sampler,
                                              candidates=[(x, v)]))
    return out


def _require_sublinear(G):
    if not getattr(G, "sublinear", False):
        raise PreconditionError("operation requires a sublinear (conic-graph) multifunction")


def _preimage_min_norm(G, y):
    _, d = polyhedra.project(np.zeros(G.n), G.A, -G.B @ y)
    return d


def sublinear_inner_norm(G, n_dirs=None, refine=True):
    """||G^{-1}||^- = sup over unit y of d(0, G^{-1}(y)); +inf if some preimage is empty.

    Directions come from a deterministic sphere design and the best one is
    refined by a local search, so the sup is approached from below.
    """
    _require_sublinear(G)
    cached = getattr(G, "_inner_norm", None)
    if cached is not None and n_dirs is None and refine:
        return cached
    m = G.m
    dirs = sphere_directions(m, n_dirs or inner_norm_direction_count(m))
    vals = np.array([_preimage_min_norm(G, y) for y in dirs])
    if np.any(np.isinf(vals)):
        value = INF
        G._empty_preimage_direction = dirs[int(np.argmax(np.isinf(vals)))]
    else:
        value = float(vals.max())
        if refine and m >= 2:
            y0 = dirs[int(np.argmax(vals))]

            def neg(y):
                nrm = np.linalg.norm(y)
                if nrm == 0:
                    return 0.0
                d = _preimage_min_norm(G, y / nrm)
                return -d if math.isfinite(d) else -1e300

            res = minimize(neg, y0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
            value = max(value, -float(res.fun))
    if n_dirs is None and refine:
        G._inner_norm = value
    return value


def reg_for_set_sublinear(G, xbar):
    """Upper bound reg(G; xbar) <= regat(G; 0|0) = inner norm, valid for every xbar in dom G."""
    _require_sublinear(G)
    if not G.in_domain(xbar):
        raise PreconditionError("xbar is not in dom G")
    return sublinear_inner_norm(G)


def sublinear_certificate(G, xbar):
    """Analytic (global) certificate for a convex process, or a refutation."""
    kappa = reg_for_set_sublinear(G, xbar)
    if math.isinf(kappa):
        y = G._empty_preimage_direction
        witness = {"x": np.zeros(G.n).tolist(), "v": np.asarray(y).tolist(), "ratio": INF}
        return RegularityCertificate(INF, INF, INF, "refuted", witness,
                                     note="preimage of a unit vector is empty: G is not onto")
    return RegularityCertificate(kappa, INF, INF, "analytic", note="inner norm of G^-1")


def perturbed_reg_bound(regG, lipf):
    """1 / (regG^-1 - lipf) when lipf < regG^-1; otherwise no certificate."""
    if not regG > 0:
        raise DomainError("regG must be positive")
    if lipf < 0:
        raise DomainError("lipf must be nonnegative")
    inv = reciprocal(regG)
    if not lipf < inv:
        raise NoCertificateError("condition reg G < lip(f)^-1 fails", regG=regG, lipf=lipf)
    return 1.0 / (inv - lipf)


def compact_values_uplift(certs):
    """Uniform certificate from pointwise ones over a finite cover of a compact fiber."""
    certs = list(certs)
    if not certs:
        raise PreconditionError("empty cover")
    if any(not c.regular for c in certs):
        raise PreconditionError("every pointwise certificate must be valid")
    kind = "analytic" if all(c.kind == "analytic" for c in certs) else "sampled"
    return RegularityCertificate(
        kappa=max(c.kappa for c in certs),
        delta=min(c.delta for c in certs),
        zeta=min(c.zeta for c in certs) / 3.0,
        kind=kind,
        samples=sum(c.samples for c in certs),
        seed=certs[0].seed,
        max_ratio=max((c.max_ratio for c in certs if c.max_ratio is not None), default=None),
    )


def sampled_set_certificate(G, xbar, delta, zeta, sampler=None, inflate=KAPPA_SAFETY):
    """Pointwise estimates at the fiber vertices, uplifted, inflated, then re-verified."""
    sampler = sampler or REGULARITY_SAMPLER
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    cover = G.fiber(xbar).vertices()
    if cover.shape[0] == 0:
        raise PreconditionError("fiber has no vertices to cover it")
    pointwise = [estimate_regat(G, xbar, y, delta, zeta, sampler) for y in cover]
    refuted = [c for c in pointwise if not c.regular]
    if refuted:
        return refuted[0]
    uniform = compact_values_uplift(pointwise)
    kappa = inflate * uniform.kappa
    checked = verify_reg_for_set(G, xbar, kappa, uniform.delta, uniform.zeta, sampler)
    if checked.kind == "refuted":
        return checked
    return replace(checked, note=f"pointwise sup {uniform.kappa:.6g} inflated by {inflate}")
