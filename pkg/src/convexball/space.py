"""Norm geometry of the ambient space: modulus of convexity and ball inclusion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedSpaceError

MAX_C = 0.125


@dataclass(frozen=True)
class SpaceSpec:
    """Finite-dimensional l^p space, 1 < p <= 2.

    ``c`` is the second-order convexity constant: delta(eps) >= c * eps**2.
    It defaults to 1/8 for p = 2 and (p - 1)/8 otherwise.  A smaller user
    value is accepted since any weaker constant remains valid.
    """

    dim: int
    p: float = 2.0
    c: float | None = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim!r}")
        if not (1.0 < self.p <= 2.0):
            raise UnsupportedSpaceError(f"norm exponent p={self.p} outside (1, 2]")
        default = default_constant(self.p)
        if self.c is None:
            object.__setattr__(self, "c", default)
        elif not (0.0 < self.c <= MAX_C):
            raise DomainError(f"c={self.c} outside (0, 1/8]")
        elif self.c > default:
            raise DomainError(
                f"c={self.c} exceeds the certified constant {default} for p={self.p}"
            )

    @property
    def is_hilbert(self):
        return self.p == 2.0

    def to_dict(self):
        return {"dim": self.dim, "p": self.p, "c": self.c}

    @classmethod
    def from_dict(cls, data):
        return cls(dim=int(data["dim"]), p=float(data.get("p", 2.0)),
                   c=None if data.get("c") is None else float(data["c"]))


def default_constant(p):
    if not (1.0 < p <= 2.0):
        raise UnsupportedSpaceError(f"norm exponent p={p} outside (1, 2]")
    return MAX_C if p == 2.0 else (p - 1.0) / 8.0


def modulus_of_convexity(space, eps):
    """Exact Hilbert modulus for p = 2, certified quadratic lower bound otherwise."""
    if not (1.0 < space.p <= 2.0):
        raise UnsupportedSpaceError(f"norm exponent p={space.p} outside (1, 2]")
    if not (0.0 <= eps <= 2.0):
        raise DomainError(f"eps={eps} outside [0, 2]")
    if space.is_hilbert:
        return 1.0 - math.sqrt(1.0 - eps * eps / 4.0)
    return (space.p - 1.0) / 8.0 * eps * eps


def second_order_constant(space):
    return space.c


def midpoint_ball_radius(space, x1, x2, r):
    """Radius rho with B((x1+x2)/2, rho) inside B(x0, r) whenever x1, x2 are in B(x0, r)."""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    d = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    return space.c * space_norm(space, d) ** 2 / r


def space_norm(space, v):
    v = np.asarray(v, dtype=float)
    if space.is_hilbert:
        return float(np.sqrt(v @ v))
    return float(np.linalg.norm(v.ravel(), ord=space.p))
