import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexball.errors import (DomainError, PreconditionError, ScalarizationError)
from convexball.multifunction import PolyhedralMultifunction as PM, SumMap, \
    sum_image_of_ball
from convexball.sampling import SamplerSpec
from convexball.scenario import load_scenario
from convexball.setvalued import (EfficientPair, OrderingCone, dominance_audit,
                                  find_efficient_pair, lagrangian, lagrangian_many,
                                  local_boundedness_check, pareto_minimal, scalarize)
from convexball.smooth import SmoothMap, linear_map, parabola2d

ORTHANT = OrderingCone.orthant(2)


def naive_minimal(pts, dual, tol):
    z = pts @ dual.T
    keep = np.ones(len(pts), dtype=bool)
    for i in range(len(pts)):
        dom = np.all(z[i] - z >= -tol, axis=1)
        dom &= np.any(np.abs(pts - pts[i]) > 1e-12, axis=1)
        keep[i] = not dom.any()
    return keep


def disk_sample(n, seed):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(size=n))
    t = rng.uniform(0, 2 * np.pi, size=n)
    return np.c_[r * np.cos(t), r * np.sin(t)]


class TestCone:
    def test_orthant(self):
        assert np.array_equal(ORTHANT.dual_generators, np.eye(2))
        assert ORTHANT.contains([1.0, 2.0]) and not ORTHANT.contains([1.0, -0.1])

    def test_dual_derivation(self):
        cone = OrderingCone([[1.0, 0.0], [1.0, 1.0]])
        duals = {tuple(np.round(d * math.sqrt(2) if abs(d[0]) > 1e-9 and abs(d[1]) > 1e-9
                                else d, 9)) for d in cone.dual_generators}
        assert duals == {(0.0, 1.0), (1.0, -1.0)}
        assert cone.contains([2.0, 1.0]) and not cone.contains([0.0, 1.0])

    def test_not_pointed(self):
        with pytest.raises(PreconditionError):
            OrderingCone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])

    def test_not_solid(self):
        with pytest.raises(PreconditionError):
            OrderingCone([[1.0, 0.0]])

    def test_zero(self):
        with pytest.raises(PreconditionError):
            OrderingCone([[0.0, 0.0]])

    def test_bad_dual(self):
        with pytest.raises(PreconditionError):
            OrderingCone(np.eye(2), [[1.0, -1.0]])

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=2))
    def test_contains_matches_dual(self, d):
        cone = OrderingCone([[1.0, 0.0], [1.0, 1.0]])
        d = np.array(d)
        by_dual = bool(np.all(cone.dual_generators @ d >= -1e-9))
        if np.min(np.abs(cone.dual_generators @ d)) > 1e-6:
            assert cone.contains(d, tol=1e-9) == by_dual


class TestPareto:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_matches_naive(self, seed):
        pts = disk_sample(3000, seed)
        cone = OrderingCone([[1.0, 0.0], [1.0, 1.0]])
        for c in (ORTHANT, cone):
            got = pareto_minimal(pts, c)
            assert np.array_equal(got, naive_minimal(pts, c.dual_generators, 1e-6))

    def test_large_disk_matches_sweep(self):
        pts = disk_sample(100_000, 5)
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        expect = np.zeros(len(pts), dtype=bool)
        best = np.inf
        for i in order:
            if pts[i, 1] < best:
                expect[i] = True
                best = pts[i, 1]
        got = pareto_minimal(pts, ORTHANT, tol=0.0)
        assert np.array_equal(got, expect)
        sel = pts[got]
        assert np.all(sel[:, 0] <= 0.05) and np.all(sel[:, 1] <= 0.05)

    def test_duplicates_kept(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        assert pareto_minimal(pts, ORTHANT).tolist() == [True, True, False]

    def test_audit(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, -1.0]])
        assert dominance_audit(pts[0], pts, ORTHANT) == []
        assert len(dominance_audit(pts[1], pts, ORTHANT)) == 2
        assert len(dominance_audit(pts[2], pts, ORTHANT)) == 0


def disk_problem():
    scn = load_scenario("disk-demo")
    F = scn.build_sum()
    cloud = sum_image_of_ball(F, scn.x0, scn.optimize["eps"], scn.sampler)
    return scn, F, cloud


class TestEfficientPair:
    def test_scalar(self):
        f = linear_map([[1.0]], [0.5], 2.0)
        F = SumMap(f, PM.zero(1, 1))
        cone = OrderingCone([[1.0]])
        pair = find_efficient_pair(F, [0.5], 0.25, cone, SamplerSpec(n_x=1001))
        assert pair.x_eps[0] == pytest.approx(0.25, abs=1e-9)
        cloud = sum_image_of_ball(F, [0.5], 0.25, SamplerSpec(n_x=1001))
        ystar = scalarize(pair, F, cone, cloud, [0.5])
        assert ystar[0] == pytest.approx(1.0)

    def test_disk(self):
        scn, F, cloud = disk_problem()
        cone = scn.build_cone()
        pair = find_efficient_pair(F, scn.x0, scn.optimize["eps"], cone, cloud=cloud)
        assert dominance_audit(pair.y_eps, cloud.points, cone) == []
        assert np.linalg.norm(pair.x_eps - scn.x0) == pytest.approx(1.0, abs=1e-6)
        ystar = scalarize(pair, F, cone, cloud, scn.x0)
        assert cone.dual_contains(ystar) and np.linalg.norm(ystar) == pytest.approx(1.0)
        assert ystar == pytest.approx([math.sqrt(0.5)] * 2, abs=0.01)
        grid = np.random.default_rng(0).normal(size=(2000, 2))
        grid /= np.maximum(1.0, np.linalg.norm(grid, axis=1))[:, None]
        vals = lagrangian_many(F.f, F.G, grid, ystar)
        ref = lagrangian(F.f, F.G, pair.x_eps, ystar)
        assert np.all(vals >= ref - 1e-4 * np.ptp(vals))
        assert pair.to_dict()["lagrangian_audit"]["passed"]


class TestLagrangian:
    def zero_map(self, m=2):
        return linear_map(np.zeros((m, 1)), [0.0], 1.0)

    def test_box(self):
        Q = PM.translated_box(np.zeros((2, 1)), [0, 0], [1, 1])
        assert lagrangian(self.zero_map(), Q, [0.0], [1.0, 1.0]) == pytest.approx(0.0)
        assert lagrangian(self.zero_map(), Q, [0.0], [-1.0, 1.0]) == pytest.approx(-1.0)

    def test_recession(self):
        Q = PM(np.zeros((2, 1)), -np.eye(2), np.zeros(2))
        assert lagrangian(self.zero_map(), Q, [0.0], [-1.0, 0.0]) == -math.inf

    def test_empty(self):
        Q = PM(np.array([[-1.0], [0.0]]), np.array([[1.0], [-1.0]]), np.array([-1.0, 0.0]))
        with pytest.raises(DomainError):
            lagrangian(linear_map(np.zeros((1, 1)), [0.0], 1.0), Q, [0.0], [1.0])

    @settings(max_examples=25)
    @given(st.integers(0, 10_000))
    def test_inner_part_midpoint_convex(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(6, 2))
        B = np.vstack([rng.normal(size=(2, 2)), np.eye(2), -np.eye(2)])
        b = np.r_[rng.uniform(0.5, 1.5, size=2), 3 * np.ones(4)]
        Q = PM(A, B, b)
        q = linear_map(np.zeros((2, 2)), [0, 0], 1.0)
        ystar = rng.normal(size=2)
        x1, x2 = rng.uniform(-0.1, 0.1, size=(2, 2))
        l1, l2 = (lagrangian(q, Q, x, ystar) for x in (x1, x2))
        mid = lagrangian(q, Q, 0.5 * (x1 + x2), ystar)
        assert mid <= 0.5 * (l1 + l2) + 1e-8


class TestLocalBoundedness:
    def test_singleton(self):
        q = linear_map(2 * np.eye(2), [0, 0], 1.0)
        W = local_boundedness_check(q, PM.zero(2, 2), [0.0, 0.0], eta=0.1)
        assert W.radius == pytest.approx(0.05, rel=1e-6)
        assert W.contains([0.15, 0.0]) and not W.contains([0.25, 0.0])

    def test_parabola_box(self):
        Q = PM.translated_box(np.zeros((2, 1)), [0, 0], [1, 1])
        W = local_boundedness_check(parabola2d(), Q, [0.0], eta=0.1)
        assert 0 < W.radius <= 1.0 and W.sampled_excess <= 0.2
        assert W.contains([0.5, 0.5]) and not W.contains([2.0, 2.0])

    def test_unbounded(self):
        Q = PM(np.zeros((2, 1)), -np.eye(2), np.zeros(2))
        with pytest.raises(PreconditionError):
            local_boundedness_check(parabola2d(), Q, [0.0])


def test_unsupported_point_rejected():
    arc = SmoothMap(lambda x: np.array([math.cos(x[0]), math.sin(x[0])]), [math.pi / 4],
                    math.pi / 4 + 0.01)
    F = SumMap(arc, PM.zero(1, 2))
    x0 = [math.pi / 4]
    cloud = sum_image_of_ball(F, x0, math.pi / 4, SamplerSpec(n_x=501))
    pair = EfficientPair(np.array(x0), arc(x0), math.pi / 4)
    with pytest.raises(ScalarizationError) as exc:
        scalarize(pair, F, ORTHANT, cloud, x0)
    assert exc.value.x is not None
