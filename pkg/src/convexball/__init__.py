"""Certified convexity radii for images of small balls under f + G."""

from .certifier import ConvexityCertificate, certified_radius, certify_sum_map, polyak_radius
from .image import DefectReport, convexity_defect, defect_curve
from .multifunction import PolyhedralMultifunction, SumMap, sum_image_of_ball
from .sampling import SamplerSpec
from .scenario import Scenario, load_scenario
from .setvalued import OrderingCone, find_efficient_pair, scalarize
from .smooth import SmoothMap, linear_map, quadratic_map
from .space import SpaceSpec, modulus_of_convexity

__version__ = "0.1.0"

__all__ = [
    "ConvexityCertificate", "DefectReport", "OrderingCone", "PolyhedralMultifunction",
    "SamplerSpec", "Scenario", "SmoothMap", "SpaceSpec", "SumMap", "certified_radius",
    "certify_sum_map", "convexity_defect", "defect_curve", "find_efficient_pair",
    "linear_map", "load_scenario", "modulus_of_convexity", "polyak_radius", "quadratic_map",
    "scalarize", "sum_image_of_ball",
]
