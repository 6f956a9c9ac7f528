"""Certified radii eps0 below which F(B(x0, eps)) is convex."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoCertificateError, PreconditionError
from .extreal import INF, reciprocal, to_jsonable
from .multifunction import usc_radius
from .regularity import (REGULARITY_SAMPLER, perturbed_reg_bound, sampled_set_certificate,
                         sublinear_certificate)
from .sampling import ball_samples
from .smooth import derivative, lip_derivative, operator_norm
from .space import SpaceSpec

SAFETY = 0.999
RADIUS_TERMS = ("delta", "delta1", "delta2", "tau", "r")
BINDING_TERMS = RADIUS_TERMS + ("regularity",)


@dataclass(frozen=True)
class ConvexityCertificate:
    eps0: float
    ingredients: dict
    binding_term: str
    safety: float
    provenance: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return to_jsonable({
            "eps0": self.eps0,
            "binding_term": self.binding_term,
            "ingredients": self.ingredients,
            "terms": self.terms,
            "safety": self.safety,
            "provenance": self.provenance,
            **self.extra,
        })


def regularity_term(c, regG, normDf, lipDf):
    """4 c (regG^-1 - ||Df(x0)||) / (Lip(Df) + 1)."""
    return 4.0 * c * (reciprocal(regG) - normDf) / (lipDf + 1.0)


def certified_radius(c, regG, normDf, lipDf, delta, delta1, delta2, tau, r,
                     safety=SAFETY, provenance=None):
    """eps0 = safety * min(delta, delta1, delta2, tau, r, regularity term).

    Radii may be +inf when discharged analytically.  regG must be finite and
    strictly below ||Df(x0)||^-1 (with 1/0 = +inf).
    """
    if not 0.0 < safety < 1.0:
        raise PreconditionError("safety factor must lie in (0, 1)")
    radii = {"delta": delta, "delta1": delta1, "delta2": delta2, "tau": tau, "r": r}
    for name, val in radii.items():
        if not val > 0:
            raise PreconditionError(f"{name} must be positive, got {val}")
    if not c > 0:
        raise PreconditionError("c must be positive")
    if normDf < 0 or lipDf < 0:
        raise PreconditionError("normDf and lipDf must be nonnegative")
    if math.isinf(regG):
        raise NoCertificateError("regG infinite", regG=regG, normDf=normDf)
    if not regG > 0:
        raise PreconditionError("regG must be positive")
    if not regG < reciprocal(normDf):
        raise NoCertificateError("condition reg G(x0) < ||Df(x0)||^-1 fails",
                                 regG=regG, normDf=normDf)
    terms = dict(radii)
    terms["regularity"] = regularity_term(c, regG, normDf, lipDf)
    binding = min(BINDING_TERMS, key=lambda k: terms[k])
    eps0 = safety * terms[binding]
    ingredients = {"c": c, "regG": regG, "normDf": normDf, "lipDf": lipDf, **radii}
    return ConvexityCertificate(eps0, ingredients, binding, safety,
                                dict(provenance or {}), terms)


def _ball_radius_in_domain(f, x0):
    return f.radius - float(np.linalg.norm(np.asarray(x0, float) - f.center))


def polyak_ingredients(f, x0, space=None, tau=None, r=None, safety=SAFETY):
    """Ingredients of the single-valued case f = h + Df(x0).

    The linear process x -> {Df(x0) x} has regularity modulus 1/sigma_min and
    is globally regular, so delta, delta1, delta2 are +inf; Dh(x0) = 0.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    space = space or SpaceSpec(dim=f.in_dim)
    jac = derivative(f, x0)
    m, n = jac.shape
    sigma = np.linalg.svd(jac, compute_uv=False)
    sigma_min = float(sigma[m - 1]) if m <= n else 0.0
    if sigma_min < 1e-10:
        raise NoCertificateError("Df(x0) is not onto", sigma_min=sigma_min)
    r = _ball_radius_in_domain(f, x0) if r is None else r
    return {
        "c": space.c,
        "regG": 1.0 / sigma_min,
        "normDf": 0.0,
        "lipDf": lip_derivative(f),
        "delta": INF,
        "delta1": INF,
        "delta2": INF,
        "tau": r if tau is None else tau,
        "r": r,
        "safety": safety,
    }


def polyak_radius(f, x0, space=None, tau=None, r=None, safety=SAFETY):
    ing = polyak_ingredients(f, x0, space, tau, r, safety)
    prov = {"regG": "analytic", "normDf": "analytic",
            "lipDf": f.lip_provenance, "delta": "analytic", "delta1": "analytic",
            "delta2": "analytic", "tau": "analytic" if tau is None else "config",
            "r": "analytic", "c": "analytic"}
    return certified_radius(**ing, provenance=prov)


def continuity_radius(f, x0, target, r_max, normDf=None, lipDf=None, n=256, steps=50):
    """Radius t with f(B(x0, t)) inside B(f(x0), target).

    With an analytic Lip(Df) the bound ||Df(x0)|| t + Lip t^2 / 2 is solved in
    closed form; otherwise the sampled modulus of continuity is bisected.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if math.isinf(target):
        return INF, "analytic"
    if f.lip_provenance == "analytic":
        a = (lipDf if lipDf is not None else f.lip_jac) / 2.0
        b = normDf if normDf is not None else operator_norm(derivative(f, x0))
        if a == 0.0:
            t = target / b if b > 0 else INF
        else:
            t = (-b + math.sqrt(b * b + 4 * a * target)) / (2 * a)
        return min(t, r_max), "analytic"
    fx0 = f(x0)

    def modulus(t):
        xs = ball_samples(x0, t, n, boundary_fraction=0.5)
        return float(np.max(np.linalg.norm(f.eval_many(xs) - fx0, axis=1)))

    if modulus(r_max) <= target:
        return r_max, "sampled"
    lo, hi = 0.0, r_max
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if modulus(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo, "sampled"


def certify_sum_map(Fmap, x0, space=None, reg_delta=0.5, reg_zeta=0.5, sampler=None,
                    overrides=None, safety=SAFETY):
    """Full pipeline for F = f + G: moduli, perturbation bound, certified radius.

    ``overrides`` may fix any of regG (with delta/zeta), delta1, delta2, tau, r.
    When only a sampled regularity modulus is available its inflated value is
    used.  The returned certificate carries the perturbed modulus regF.
    """
    overrides = dict(overrides or {})
    f, G = Fmap.f, Fmap.G
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    space = space or SpaceSpec(dim=f.in_dim)
    prov = {"c": "analytic"}
    normDf = operator_norm(derivative(f, x0))
    prov["normDf"] = "analytic" if f.jac is not None else "estimated"
    lipDf = lip_derivative(f)
    prov["lipDf"] = f.lip_provenance

    if "regG" in overrides:
        regG = float(overrides["regG"])
        delta = float(overrides.get("delta", INF))
        zeta = float(overrides.get("zeta", INF))
        prov["regG"] = "config"
        reg_cert = None
    else:
        if G.sublinear:
            reg_cert = sublinear_certificate(G, x0)
        else:
            reg_cert = sampled_set_certificate(G, x0, reg_delta, reg_zeta,
                                               sampler or REGULARITY_SAMPLER)
        if not reg_cert.regular:
            raise NoCertificateError("regG infinite" if math.isinf(reg_cert.kappa)
                                     else "G fails the set-uniform regularity check",
                                     regularity=reg_cert.to_dict())
        regG, delta, zeta = reg_cert.kappa, reg_cert.delta, reg_cert.zeta
        prov["regG"] = reg_cert.kind
    if "delta" in overrides:
        delta = float(overrides["delta"])
    prov["delta"] = "config" if "delta" in overrides else prov["regG"]
    regF = perturbed_reg_bound(regG, normDf)

    r = float(overrides.get("r", _ball_radius_in_domain(f, x0)))
    if "delta1" in overrides:
        delta1, prov["delta1"] = float(overrides["delta1"]), "config"
    else:
        delta1, prov["delta1"] = continuity_radius(f, x0, zeta / 4.0, r, normDf, lipDf)
    if "delta2" in overrides:
        delta2, prov["delta2"] = float(overrides["delta2"]), "config"
    elif math.isinf(zeta):
        delta2, prov["delta2"] = INF, "analytic"
    else:
        delta2, prov["delta2"] = usc_radius(G, x0, zeta / 4.0, r), "sampled"
    tau = float(overrides.get("tau", r))
    prov["tau"] = "config" if "tau" in overrides else "analytic"
    prov["r"] = "config" if "r" in overrides else "analytic"

    cert = certified_radius(space.c, regG, normDf, lipDf, delta, delta1, delta2, tau, r,
                            safety=safety, provenance=prov)
    cert.extra["regF"] = regF
    cert.extra["zeta"] = zeta
    if reg_cert is not None:
        cert.extra["regularity"] = reg_cert.to_dict()
    return cert
