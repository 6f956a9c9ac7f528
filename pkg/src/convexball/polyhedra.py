"""Polyhedral primitives: projection, feasibility, vertices, recession directions.

Projection onto {z : M z <= h} is solved as a least-distance program with the
Lawson-Hanson reduction to nonnegative least squares, then polished on the
detected active set and checked against a KKT residual.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from .errors import NumericalError

KKT_TOL = 1e-8


def _normalize_rows(m, h):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    norms = np.linalg.norm(m, axis=1)
    zero = norms < 1e-14
    if np.any(h[zero] < -1e-12):
        return None, None
    keep = ~zero
    return m[keep] / norms[keep, None], h[keep] / norms[keep]


def nnls(a, b, tol=None, max_iter=None):
    """Lawson-Hanson active-set solver for min ||a u - b|| subject to u >= 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if tol is None:
        tol = 10 * max(m, n) * np.finfo(float).eps * max(1.0, np.linalg.norm(a, 1))
    if max_iter is None:
        max_iter = 100 * n + 100
    u = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        w = a.T @ (b - a @ u)
        cand = ~passive & ~blocked & (w > tol)
        if not np.any(cand):
            return u, float(np.linalg.norm(a @ u - b))
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        z = np.zeros(n)
        z[passive] = np.linalg.lstsq(a[:, passive], b, rcond=None)[0]
        if z[j] <= tol:
            # w_j > 0 came from roundoff; skip j until u moves again
            passive[j] = False
            blocked[j] = True
            continue
        while np.any(z[passive] <= 0):
            bad = passive & (z <= 0)
            alpha = np.min(u[bad] / (u[bad] - z[bad]))
            u = u + alpha * (z - u)
            passive &= u > tol
            u[~passive] = 0.0
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(a[:, passive], b, rcond=None)[0]
        u = z
        blocked[:] = False
    raise NumericalError("nnls did not converge")


def least_distance(g, h):
    """min ||z|| subject to g z >= h, or None when infeasible."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = g.shape[1]
    if g.shape[0] == 0:
        return np.zeros(n)
    e = np.vstack([g.T, h[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = nnls(e, f)
    r = e @ u - f
    if np.linalg.norm(r) < 1e-12 or abs(r[-1]) < 1e-14:
        return None
    return -r[:n] / r[-1]


def _polish(v, m, h, z, tol):
    """Re-solve the projection on the active set; keep it if it is at least as good."""
    slack = h - m @ z
    active = slack <= tol * (1.0 + np.abs(h))
    if not np.any(active):
        return z, np.zeros(0), active
    ma = m[active]
    lam, *_ = np.linalg.lstsq(ma @ ma.T, ma @ v - h[active], rcond=None)
    zp = v - ma.T @ lam
    if np.max(m @ zp - h, initial=0.0) <= np.max(m @ z - h, initial=0.0) + 1e-14 \
            and np.min(lam, initial=0.0) >= -1e-9:
        return zp, lam, active
    return z, lam, active


def project(v, m, h):
    """Euclidean projection of ``v`` onto {z : m z <= h}.

    Returns ``(z, distance)``; ``(None, inf)`` when the polyhedron is empty.
    Raises NumericalError when the KKT residual stays above 1e-8 (scaled).
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    mn, hn = _normalize_rows(m, h)
    if mn is None:
        return None, math.inf
    if mn.shape[0] == 0:
        return v.copy(), 0.0
    viol = mn @ v - hn
    if np.all(viol <= 0):
        return v.copy(), 0.0
    w = least_distance(-mn, viol)
    if w is None:
        return None, math.inf
    z = v + w
    z, lam, _ = _polish(v, mn, hn, z, 1e-9)
    scale = 1.0 + np.linalg.norm(v) + np.max(np.abs(hn))
    primal = float(np.max(mn @ z - hn, initial=0.0))
    if primal > KKT_TOL * scale:
        # NNLS may stall on nearly dependent rows; accept only a feasible LP point
        if not is_feasible(mn, hn):
            return None, math.inf
        raise NumericalError(f"projection residual {primal:.3g} above tolerance",
                             residual=primal)
    return z, float(np.linalg.norm(z - v))


def is_feasible(m, h, tol=1e-9):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if m.shape[0] == 0:
        return True
    res = linprog(np.zeros(m.shape[1]), A_ub=m, b_ub=h + tol, bounds=(None, None),
                  method="highs")
    return res.status == 0


def feasible_point(m, h):
    """Chebyshev-style interior-ish point (max slack, capped), or None."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = m.shape[1]
    norms = np.linalg.norm(m, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a = np.hstack([m, norms[:, None]])
    res = linprog(c, A_ub=a, b_ub=h, bounds=[(None, None)] * n + [(0, 1.0)],
                  method="highs")
    if res.status != 0:
        return None
    return res.x[:n]


def recession_directions(m, tol=1e-9):
    """Unit directions d != 0 with m d <= 0 found by coordinate LPs (empty if bounded)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[1]
    out = []
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = linprog(c, A_ub=m, b_ub=np.zeros(m.shape[0]), bounds=[(-1, 1)] * n,
                          method="highs")
            if res.status == 0 and -res.fun > tol:
                d = res.x / np.linalg.norm(res.x)
                if not any(np.allclose(d, o, atol=1e-9) for o in out):
                    out.append(d)
    return out


def vertices(m, h, tol=1e-9):
    """Vertices of {y : m y <= h} by enumerating nonsingular row subsets (small m only)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    k, n = m.shape
    pts = []
    for rows in itertools.combinations(range(k), n):
        sub = m[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        y = np.linalg.solve(sub, h[list(rows)])
        if np.all(m @ y <= h + tol * (1 + np.abs(h))):
            pts.append(y)
    return dedupe(np.array(pts).reshape(-1, n))


def dedupe(points, decimals=10):
    if len(points) == 0:
        return points
    _, idx = np.unique(np.round(points, decimals), axis=0, return_index=True)
    return points[np.sort(idx)]
