"""Deterministic samplers for balls, spheres and pair budgets.

Balls are sampled with scrambled Halton sequences plus an explicit layer of
boundary points, because several checks (boundary preimages, efficient
pairs, convexity defects near the rim) depend on the sphere being covered.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc


@dataclass(frozen=True)
class SamplerSpec:
    seed: int = 0
    n_x: int = 2000
    n_y: int = 0
    pair_budget: int = 100_000
    boundary_fraction: float = 0.25
    bounding_box: float | None = None

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


def _halton(dim, n, seed):
    if n <= 0:
        return np.empty((0, dim))
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(n)


def _gaussianize(u):
    return ndtri(np.clip(u, 1e-12, 1 - 1e-12))


def sphere_directions(dim, n, seed=0):
    """Unit vectors covering the sphere in R^dim.

    dim 1 always yields the two points -1, +1; dim 2 an equiangular grid
    starting at angle 0; higher dimensions a normalized Gaussianized Halton set.
    """
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        t = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(t), np.sin(t)])
    g = _gaussianize(_halton(dim, n, seed))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def inner_norm_direction_count(dim):
    """4096 directions up to dimension 4, then 1024 * 2**dim capped at 2**16."""
    if dim <= 4:
        return 4096
    return min(1024 * 2**dim, 2**16)


def ball_samples(center, radius, n, seed=0, boundary_fraction=0.25):
    """Deterministic quasi-uniform sample of the closed Euclidean ball."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = center.size
    if radius == 0 or n <= 1:
        return center[None, :].copy()
    if dim == 1:
        return center + radius * np.linspace(-1.0, 1.0, n)[:, None]
    n_b = max(2 * dim, int(round(boundary_fraction * n)))
    n_b = min(n_b, n)
    n_i = n - n_b
    rim = sphere_directions(dim, n_b, seed)
    if dim == 2:
        u = _halton(2, n_i, seed)
        rho = np.sqrt(u[:, 0])
        t = 2.0 * np.pi * u[:, 1]
        inner = np.column_stack([rho * np.cos(t), rho * np.sin(t)])
    else:
        u = _halton(dim + 1, n_i, seed)
        g = _gaussianize(u[:, :dim])
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        inner = g * u[:, dim:] ** (1.0 / dim)
    return center + radius * np.vstack([rim, inner])


def random_ball(rng, center, radius, n):
    """I.i.d. uniform points in a Euclidean ball (for Monte Carlo checks)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = center.size
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rho = rng.random(n) ** (1.0 / dim)
    return center + radius * g * rho[:, None]


def random_sphere(rng, center, radius, n):
    center = np.atleast_1d(np.asarray(center, dtype=float))
    g = rng.standard_normal((n, center.size))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return center + radius * g


def pair_indices(n, budget, rng):
    """All index pairs i < j when they fit the budget, else ``budget`` random pairs."""
    total = n * (n - 1) // 2
    if total <= budget:
        i, j = np.triu_indices(n, k=1)
        return i, j
    i = rng.integers(0, n, size=budget)
    j = rng.integers(0, n - 1, size=budget)
    j = np.where(j >= i, j + 1, j)
    return i, j
