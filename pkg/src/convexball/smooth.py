"""C^{1,1} single-valued maps on a ball and their derivative moduli."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDomainError, DomainError, EvaluationError
from .sampling import random_ball

LIP_SAFETY = 1.25


class SmoothMap:
    """A map R^n -> R^m restricted to the closed ball B(center, radius).

    ``jac`` is an optional analytic Jacobian returning an (m, n) array.
    ``lip_jac`` is an optional Lipschitz constant of the Jacobian on the ball;
    without it :func:`lip_derivative` falls back to an inflated sampled estimate.
    """

    def __init__(self, func, center, radius, jac=None, lip_jac=None, name=None):
        self.func = func
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if self.radius < 0:
            raise DomainError("domain radius must be nonnegative")
        self.jac = jac
        self.lip_jac = None if lip_jac is None else float(lip_jac)
        if self.lip_jac is not None and self.lip_jac < 0:
            raise DomainError("lip_jac must be nonnegative")
        self.name = name or getattr(func, "__name__", "map")
        self._lip_estimate = None
        self.out_dim = self(self.center).size

    @property
    def in_dim(self):
        return self.center.size

    def __call__(self, x):
        y = np.atleast_1d(np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float))
        if not np.all(np.isfinite(y)):
            raise EvaluationError(f"{self.name} returned non-finite values at {x}")
        return y

    def eval_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        if xs.shape[0] == 0:
            return np.empty((0, self.out_dim))
        return np.vstack([self(x) for x in xs])

    def contains(self, x, rtol=1e-9):
        d = np.linalg.norm(np.asarray(x, dtype=float) - self.center)
        return d <= self.radius * (1 + rtol) + 1e-12

    def restrict(self, center, radius):
        """Same map on another ball; analytic constants carry over to sub-balls only."""
        sub = SmoothMap(self.func, center, radius, jac=self.jac, name=self.name,
                        lip_jac=self.lip_jac)
        return sub

    @property
    def lip_provenance(self):
        if self.lip_jac is not None:
            return "analytic"
        if self._lip_estimate is not None:
            return "estimated"
        return None

    def validate_jacobian(self, n=100, seed=0, rtol=1e-5):
        """Largest relative gap between ``jac`` and central differences at random points."""
        if self.jac is None:
            return 0.0
        rng = np.random.default_rng(seed)
        pts = random_ball(rng, self.center, self.radius, n)
        worst = 0.0
        for x in pts:
            a = np.atleast_2d(np.asarray(self.jac(x), dtype=float))
            fd = finite_difference_jacobian(self, x)
            worst = max(worst, np.linalg.norm(a - fd) / max(1.0, np.linalg.norm(a)))
        if worst > rtol:
            raise EvaluationError(f"analytic Jacobian of {self.name} disagrees with "
                                  f"finite differences (relative gap {worst:.3g})")
        return worst


def finite_difference_jacobian(f, x):
    x = np.asarray(x, dtype=float)
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((f(x + e) - f(x - e)) / (2.0 * h))
    jac = np.column_stack(cols)
    if not np.all(np.isfinite(jac)):
        raise EvaluationError("non-finite finite differences")
    return jac


def derivative(f, x):
    """Jacobian of ``f`` at ``x``: analytic when available, central differences otherwise."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not f.contains(x):
        raise DomainError(f"{x} lies outside the domain ball of {f.name}")
    if f.jac is not None:
        jac = np.asarray(f.jac(x), dtype=float).reshape(f.out_dim, f.in_dim)
        if not np.all(np.isfinite(jac)):
            raise EvaluationError("analytic Jacobian returned non-finite values")
        return jac
    return finite_difference_jacobian(f, x)


def operator_norm(a, rtol=1e-10, max_iter=10_000):
    """Largest singular value by power iteration on A^T A."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0 or not np.any(a):
        return 0.0
    ata = a.T @ a
    v = np.random.default_rng(12345).standard_normal(ata.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = ata @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    # Rayleigh quotient of the final iterate
    lam = max(lam, float(v @ ata @ v))
    return float(np.sqrt(lam))


def lip_derivative(f, n_pairs=10_000, seed=0, safety=LIP_SAFETY):
    """Lipschitz constant of Df on the domain ball.

    Returns ``f.lip_jac`` when supplied.  Otherwise the sup of
    ||Df(u) - Df(v)|| / ||u - v|| over sampled pairs, times ``safety``;
    the estimate is cached on the map and flagged ``estimated``.
    """
    if f.lip_jac is not None:
        return f.lip_jac
    if f._lip_estimate is not None:
        return f._lip_estimate
    if f.radius <= 0:
        raise DegenerateDomainError("cannot sample pairs in a zero-radius ball")
    rng = np.random.default_rng(seed)
    n_pool = min(1000, n_pairs)
    pool = random_ball(rng, f.center, f.radius, n_pool)
    # near partners catch local curvature that far pairs average out
    n_near = n_pool // 5
    step = 1e-3 * f.radius * rng.standard_normal((n_near, f.in_dim))
    near = pool[:n_near] + step
    outside = np.linalg.norm(near - f.center, axis=1) > f.radius
    near[outside] = pool[:n_near][outside] - step[outside]
    pts = np.vstack([pool, near])
    jacs = np.stack([derivative(f, x) for x in pts])
    i = rng.integers(0, n_pool, size=n_pairs - n_near)
    j = rng.integers(0, n_pool, size=n_pairs - n_near)
    i = np.concatenate([i, np.arange(n_near)])
    j = np.concatenate([j, n_pool + np.arange(n_near)])
    keep = i != j
    i, j = i[keep], j[keep]
    dx = np.linalg.norm(pts[i] - pts[j], axis=1)
    dj = np.linalg.norm(jacs[i] - jacs[j], ord=2, axis=(1, 2))
    if f.jac is None:
        # central-difference roundoff floor
        scale = max(1.0, float(np.max(np.abs(jacs))))
        dj = np.where(dj <= 1e-7 * scale, 0.0, dj)
    ok = dx > 0
    est = float(np.max(dj[ok] / dx[ok])) if np.any(ok) else 0.0
    f._lip_estimate = safety * est
    return f._lip_estimate


def midpoint_defect(f, x1, x2):
    """|| (f(x1) + f(x2))/2 - f((x1 + x2)/2) ||; the segment must stay in the domain."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    # the ball is convex, so endpoints inside means the segment is inside
    if not (f.contains(x1) and f.contains(x2)):
        raise DomainError("segment [x1, x2] leaves the domain ball")
    mid = 0.5 * (x1 + x2)
    return float(np.linalg.norm(0.5 * (f(x1) + f(x2)) - f(mid)))


# built-in families -------------------------------------------------------


def linear_map(matrix, center, radius, offset=None):
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    off = np.zeros(m.shape[0]) if offset is None else np.asarray(offset, dtype=float)
    return SmoothMap(lambda x: m @ x + off, center, radius, jac=lambda x: m,
                     lip_jac=0.0, name="linear")


def quadratic_lip_bound(hessians):
    """sqrt(sum ||H_i||_2^2): an upper bound for Lip(Df), exact for one output."""
    return float(np.sqrt(sum(np.linalg.norm(h, 2) ** 2 for h in hessians)))


def quadratic_map(hessians, gradients, constants, center, radius, lip_jac=None):
    """f_i(x) = const_i + grad_i . x + x^T H_i x / 2, with H_i symmetrized."""
    hs = np.asarray(hessians, dtype=float)
    hs = 0.5 * (hs + np.transpose(hs, (0, 2, 1)))
    gs = np.atleast_2d(np.asarray(gradients, dtype=float))
    cs = np.atleast_1d(np.asarray(constants, dtype=float))

    def func(x):
        return cs + gs @ x + 0.5 * np.einsum("i,kij,j->k", x, hs, x)

    def jac(x):
        return gs + hs @ x

    lip = quadratic_lip_bound(hs) if lip_jac is None else lip_jac
    return SmoothMap(func, center, radius, jac=jac, lip_jac=lip, name="quadratic")


def parabola2d(center=(0.0,), radius=1.0):
    """x -> (0, x^2) on the real line."""
    return SmoothMap(lambda x: np.array([0.0, x[0] ** 2]), center, radius,
                     jac=lambda x: np.array([[0.0], [2.0 * x[0]]]), lip_jac=2.0,
                     name="parabola2d")
