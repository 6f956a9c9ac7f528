"""Scenario files (TOML): parsing, validation, and construction of the model objects."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConvexBallError, ScenarioError
from .multifunction import PolyhedralMultifunction, ProductLevelMultifunction, SumMap
from .sampling import SamplerSpec
from .setvalued import OrderingCone
from .smooth import linear_map, parabola2d, quadratic_map
from .space import SpaceSpec

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MAP_KINDS = ("linear", "quadratic", "parabola2d")
MULTI_KINDS = ("polyhedral", "linear", "zero", "box", "product-level")
RADII_KEYS = ("r", "tau", "delta", "delta1", "delta2")


def _arr(value, what, ndim):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what}: not a numeric array") from exc
    if a.ndim != ndim:
        raise ScenarioError(f"{what}: expected a {ndim}-d array, got shape {a.shape}")
    return a


@dataclass
class Scenario:
    name: str
    space: SpaceSpec
    x0: np.ndarray
    map: dict
    multifunction: dict | None = None
    radii: dict = field(default_factory=dict)
    regularity: dict = field(default_factory=dict)
    cone: dict | None = None
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    overrides: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    optimize: dict = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_dict(cls, data, name=None):
        data = dict(data)
        known = {"name", "description", "space", "x0", "map", "multifunction", "radii",
                 "regularity", "cone", "sampler", "overrides", "verify", "optimize"}
        extra = set(data) - known
        if extra:
            raise ScenarioError(f"unknown top-level keys: {sorted(extra)}")
        for key in ("x0", "map"):
            if key not in data:
                raise ScenarioError(f"missing required key {key!r}")
        x0 = _arr(data["x0"], "x0", 1)
        try:
            space = SpaceSpec.from_dict(data.get("space", {"dim": x0.size}))
            sampler = SamplerSpec.from_dict(data.get("sampler", {}))
        except (KeyError, TypeError, ValueError, ConvexBallError) as exc:
            raise ScenarioError(str(exc)) from exc
        radii = dict(data.get("radii", {}))
        bad = set(radii) - set(RADII_KEYS)
        if bad:
            raise ScenarioError(f"unknown radii: {sorted(bad)}")
        scn = cls(name=data.get("name", name or "scenario"), space=space, x0=x0,
                  map=dict(data["map"]), multifunction=data.get("multifunction"),
                  radii={k: float(v) for k, v in radii.items()},
                  regularity=dict(data.get("regularity", {})), cone=data.get("cone"),
                  sampler=sampler, overrides=dict(data.get("overrides", {})),
                  verify=dict(data.get("verify", {})), optimize=dict(data.get("optimize", {})),
                  description=data.get("description", ""))
        scn.check()
        return scn

    # construction

    def build_f(self):
        spec = self.map
        kind = spec.get("kind")
        center = spec.get("center", self.x0.tolist())
        radius = float(spec.get("radius", 1.0))
        lip = spec.get("lip_jac")
        if kind == "linear":
            f = linear_map(_arr(spec["matrix"], "map.matrix", 2), center, radius,
                           spec.get("offset"))
        elif kind == "quadratic":
            f = quadratic_map(_arr(spec["hessians"], "map.hessians", 3),
                              _arr(spec["gradients"], "map.gradients", 2),
                              _arr(spec.get("constants", [0.0] * len(spec["gradients"])),
                                   "map.constants", 1),
                              center, radius, lip_jac=lip)
        elif kind == "parabola2d":
            f = parabola2d(center, radius)
        else:
            raise ScenarioError(f"map.kind must be one of {MAP_KINDS}, got {kind!r}")
        f.name = self.name
        return f

    def build_G(self):
        spec = self.multifunction
        if spec is None:
            return None
        kind = spec.get("kind")
        n, m = self.space.dim, self._out_dim()
        if kind == "polyhedral":
            return PolyhedralMultifunction(_arr(spec["A"], "multifunction.A", 2),
                                           _arr(spec["B"], "multifunction.B", 2),
                                           _arr(spec["b"], "multifunction.b", 1),
                                           bounding_box=spec.get("bounding_box"))
        if kind == "linear":
            return PolyhedralMultifunction.linear(_arr(spec["M"], "multifunction.M", 2))
        if kind == "zero":
            return PolyhedralMultifunction.zero(n, m)
        if kind == "box":
            return PolyhedralMultifunction.translated_box(
                _arr(spec.get("M", np.zeros((m, n))), "multifunction.M", 2),
                _arr(spec["lower"], "multifunction.lower", 1),
                _arr(spec["upper"], "multifunction.upper", 1))
        if kind == "product-level":
            return ProductLevelMultifunction()
        raise ScenarioError(f"multifunction.kind must be one of {MULTI_KINDS}, got {kind!r}")

    def build_sum(self):
        G = self.build_G()
        if G is None:
            G = PolyhedralMultifunction.zero(self.space.dim, self._out_dim())
        if isinstance(G, ProductLevelMultifunction):
            raise ScenarioError("the product-level multifunction has no sum-map pipeline")
        return SumMap(self.build_f(), G)

    def build_cone(self):
        if self.cone is None:
            return None
        return OrderingCone(_arr(self.cone["generators"], "cone.generators", 2),
                            self.cone.get("dual_generators"))

    @property
    def single_valued(self):
        return self.multifunction is None or self.multifunction.get("kind") == "zero"

    def _out_dim(self):
        f = self.build_f()
        return f.out_dim

    def check(self):
        """Dimension consistency; raises ScenarioError."""
        n = self.space.dim
        if self.x0.size != n:
            raise ScenarioError(f"x0 has length {self.x0.size}, space.dim is {n}")
        try:
            f = self.build_f()
        except (KeyError, ValueError, TypeError, ConvexBallError) as exc:
            raise ScenarioError(f"map: {exc}") from exc
        if f.in_dim != n:
            raise ScenarioError(f"map acts on R^{f.in_dim}, space.dim is {n}")
        if not f.contains(self.x0):
            raise ScenarioError("x0 is outside the domain ball of the map")
        spec = self.multifunction
        if spec is not None and spec.get("kind") != "product-level":
            try:
                G = self.build_G()
            except (KeyError, ValueError, TypeError, ConvexBallError) as exc:
                raise ScenarioError(f"multifunction: {exc}") from exc
            if G.n != n or G.m != f.out_dim:
                raise ScenarioError(f"multifunction is R^{G.n} => R^{G.m}, map is "
                                    f"R^{n} -> R^{f.out_dim}")
        if self.cone is not None:
            gens = _arr(self.cone["generators"], "cone.generators", 2)
            if gens.shape[1] != f.out_dim:
                raise ScenarioError("cone generators do not match the image dimension")

    def to_dict(self):
        return {
            "name": self.name, "description": self.description,
            "space": self.space.to_dict(), "x0": self.x0.tolist(), "map": self.map,
            "multifunction": self.multifunction, "radii": self.radii,
            "regularity": self.regularity, "cone": self.cone,
            "sampler": self.sampler.to_dict(), "overrides": self.overrides,
            "verify": self.verify, "optimize": self.optimize,
        }


def builtin_names():
    root = resources.files("convexball") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".toml") and p.name != "expectations.toml")


def _read_text(path_or_name):
    path = Path(path_or_name)
    if path.suffix == ".toml" and path.exists():
        return path.read_text(), path.stem
    root = resources.files("convexball") / "scenarios"
    res = root / f"{path_or_name}.toml"
    if res.is_file():
        return res.read_text(), str(path_or_name)
    if path.exists():
        return path.read_text(), path.stem
    raise ScenarioError(f"no scenario file or built-in named {path_or_name!r}")


def load_scenario(path_or_name):
    """Load a scenario from a TOML path or a built-in name."""
    text, stem = _read_text(path_or_name)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    return Scenario.from_dict(data, name=stem)


def load_expectations():
    text = (resources.files("convexball") / "scenarios" / "expectations.toml").read_text()
    return tomllib.loads(text)["case"]
