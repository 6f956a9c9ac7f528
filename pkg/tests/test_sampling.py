import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexball.extreal import INF, from_jsonable, reciprocal, to_jsonable
from convexball.sampling import (SamplerSpec, ball_samples, inner_norm_direction_count,
                                 pair_indices, sphere_directions)


class TestBallSamples:
    @pytest.mark.parametrize("dim", [1, 2, 3, 5])
    def test_inside_and_rim(self, dim):
        c = np.arange(dim, dtype=float)
        pts = ball_samples(c, 0.7, 500)
        d = np.linalg.norm(pts - c, axis=1)
        assert pts.shape == (500, dim)
        assert d.max() <= 0.7 * (1 + 1e-12)
        assert np.sum(np.isclose(d, 0.7)) >= 2

    def test_deterministic(self):
        a = ball_samples([0.0, 0.0], 1.0, 300, seed=4)
        b = ball_samples([0.0, 0.0], 1.0, 300, seed=4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, ball_samples([0.0, 0.0], 1.0, 300, seed=5))

    def test_zero_radius(self):
        assert np.array_equal(ball_samples([1.0, 2.0], 0.0, 50), [[1.0, 2.0]])

    def test_one_dimensional_endpoints(self):
        pts = ball_samples([0.5], 0.25, 11)[:, 0]
        assert pts.min() == 0.25 and pts.max() == 0.75


def test_sphere_directions_unit():
    for dim in (1, 2, 3, 6):
        d = sphere_directions(dim, 64)
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.allclose(sphere_directions(2, 4)[0], [1.0, 0.0])


def test_inner_norm_direction_count():
    assert inner_norm_direction_count(2) == 4096
    assert inner_norm_direction_count(4) == 4096
    assert inner_norm_direction_count(5) == 1024 * 32
    assert inner_norm_direction_count(9) == 2**16


def test_pair_indices():
    rng = np.random.default_rng(0)
    i, j = pair_indices(5, 100, rng)
    assert len(i) == 10 and np.all(i < j)
    i, j = pair_indices(1000, 200, rng)
    assert len(i) == 200 and np.all(i != j)


def test_sampler_roundtrip():
    s = SamplerSpec(seed=3, n_x=10, n_y=2)
    assert SamplerSpec.from_dict(s.to_dict()) == s
    assert s.with_seed(9).seed == 9


class TestExtendedReals:
    def test_reciprocal_conventions(self):
        assert reciprocal(0.0) == INF
        assert reciprocal(INF) == 0.0
        assert reciprocal(4.0) == 0.25
        with pytest.raises(ValueError):
            reciprocal(-1.0)

    @given(st.floats(1e-300, 1e300))
    def test_reciprocal_involution(self, v):
        assert reciprocal(reciprocal(v)) == pytest.approx(v, rel=1e-12)

    def test_json_roundtrip(self):
        obj = {"a": INF, "b": [np.float64(1.5), -INF], "c": np.array([1, 2])}
        enc = to_jsonable(obj)
        assert enc == {"a": "inf", "b": [1.5, "-inf"], "c": [1, 2]}
        dec = from_jsonable(enc)
        assert dec["a"] == INF and dec["b"][1] == -INF and not math.isnan(dec["b"][0])
