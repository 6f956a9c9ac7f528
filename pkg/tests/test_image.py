import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from convexball.errors import PreconditionError
from convexball.image import (boundary_preimage_check, convexity_defect, defect_curve,
                              hull_gap, on_hull_boundary, pass_threshold)
from convexball.multifunction import ImageCloud, PolyhedralMultifunction as PM, SumMap, \
    sum_image_of_ball
from convexball.sampling import SamplerSpec
from convexball.smooth import linear_map, parabola2d, quadratic_map

# exact defect of the curve t -> (t, t + t^2), |t| <= eps, attained at the endpoints
PARABOLA_EXACT = {0.1: 0.007053390693067348, 0.5: 0.16592048182615238,
                  1.0: 0.5590169943749475}


def parabola_sum():
    return SumMap(parabola2d(), PM.linear([[1.0], [1.0]]))


def polyak_sum(radius=2.0):
    f = quadratic_map([[[0, 0], [0, 2.0]], np.zeros((2, 2))], np.eye(2), [0, 0], [0, 0],
                      radius, lip_jac=2.0)
    return SumMap(f, PM.zero(2, 2))


def disk_sum(scale=1.0):
    return SumMap(linear_map(scale * np.eye(2), [0, 0], 2.0), PM.zero(2, 2))


def endpoint_defect(eps):
    """Distance from the chord midpoint to the curve, by 1-d minimization."""
    mid = np.array([0.0, eps * eps])
    r = minimize_scalar(lambda t: t * t + (t + t * t - mid[1]) ** 2, bounds=(-eps, eps),
                        method="bounded", options={"xatol": 1e-14})
    return float(np.sqrt(r.fun))


def test_singleton_cloud():
    rep = convexity_defect(np.array([[1.0, 2.0]]))
    assert rep.defect == 0.0 and rep.passed and rep.witness_pair is None


def test_zero_radius_curve():
    reps = defect_curve(disk_sum(), [0.0, 0.0], [0.0])
    assert reps[0].defect == 0.0 and reps[0].n_points == 1


def test_segment_is_convex():
    pts = np.linspace(0, 1, 101)[:, None] * np.array([[1.0, 2.0]])
    assert convexity_defect(pts).passed


@pytest.mark.parametrize("eps", sorted(PARABOLA_EXACT))
def test_parabola_oracle_frozen(eps):
    assert endpoint_defect(eps) == pytest.approx(PARABOLA_EXACT[eps], abs=1e-10)


@pytest.mark.parametrize("eps", [0.5, 1.0])
def test_parabola_sampled_defect(eps):
    sampler = SamplerSpec(seed=0, n_x=2000)
    rep = defect_curve(parabola_sum(), [0.0], [eps], sampler)[0]
    exact = PARABOLA_EXACT[eps]
    assert abs(rep.defect - exact) <= rep.resolution
    assert not rep.passed


def test_disk_passes():
    rep = defect_curve(disk_sum(), [0.0, 0.0], [1.0], SamplerSpec(n_x=10000))[0]
    assert rep.passed


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scale_equivariance(lam):
    sampler = SamplerSpec(seed=3, n_x=3000)
    base = defect_curve(polyak_sum(), [0.0, 0.0], [1.0], sampler)[0]
    cloud = sum_image_of_ball(polyak_sum(), [0.0, 0.0], 1.0, sampler)
    scaled = convexity_defect(ImageCloud(lam * cloud.points, cloud.sources), sampler)
    assert scaled.defect == pytest.approx(lam * base.defect, rel=1e-9)
    assert scaled.threshold == pytest.approx(lam * base.threshold, rel=1e-9)


def test_witness_recomputes():
    sampler = SamplerSpec(seed=1, n_x=3000)
    cloud = sum_image_of_ball(polyak_sum(), [0.0, 0.0], 1.665, sampler)
    rep = convexity_defect(cloud, sampler)
    w = rep.witness_pair
    mid = 0.5 * (np.array(w["y1"]) + np.array(w["y2"]))
    d, _ = cKDTree(cloud.points).query(mid)
    assert abs(d - rep.defect) <= 1e-12
    assert np.allclose(mid, w["midpoint"], atol=1e-15)


def test_seed_reproducible():
    sampler = SamplerSpec(seed=7, n_x=2000)
    a = defect_curve(polyak_sum(), [0.0, 0.0], [0.5, 1.0], sampler)
    b = defect_curve(polyak_sum(), [0.0, 0.0], [0.5, 1.0], sampler)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_quadratic_image_nonconvex_beyond_half():
    rep = defect_curve(polyak_sum(), [0.0, 0.0], [1.665], SamplerSpec(n_x=10000))[0]
    assert not rep.passed


def test_threshold_formula():
    assert pass_threshold(0.1, 1.0) == 0.2
    assert pass_threshold(0.001, 1.0) == 0.02


def test_hull_gap():
    disk = sum_image_of_ball(disk_sum(), [0.0, 0.0], 1.0, SamplerSpec(n_x=5000))
    para = sum_image_of_ball(parabola_sum(), [0.0], 1.0, SamplerSpec(n_x=2000))
    assert hull_gap(disk) < 0.1
    assert hull_gap(para) > 0.3


class TestBoundaryPreimage:
    def test_linear(self):
        y = np.array([1.0, 0.0])
        assert boundary_preimage_check(disk_sum(), [0.0, 0.0], 1.0, y,
                                       sampler=SamplerSpec(n_x=4000))

    def test_quadratic_hull_vertex(self):
        F = polyak_sum()
        cloud = sum_image_of_ball(F, [0.0, 0.0], 0.1, SamplerSpec(n_x=4000))
        y = cloud.points[np.argmax(cloud.points[:, 0])]
        assert on_hull_boundary(cloud.points, y)
        assert boundary_preimage_check(F, [0.0, 0.0], 0.1, y, cloud=cloud)

    def test_interior_rejected(self):
        with pytest.raises(PreconditionError):
            boundary_preimage_check(disk_sum(), [0.0, 0.0], 1.0, [0.0, 0.0],
                                    sampler=SamplerSpec(n_x=2000))
