import numpy as np
import pytest

from convexball.errors import ScenarioError
from convexball.scenario import Scenario, builtin_names, load_expectations, load_scenario

BASE = {"x0": [0.0, 0.0],
        "map": {"kind": "linear", "matrix": [[1.0, 0.0], [0.0, 1.0]], "radius": 1.0,
                "center": [0.0, 0.0]}}


@pytest.mark.parametrize("name", builtin_names())
def test_builtins_load(name):
    scn = load_scenario(name)
    assert scn.name == name
    f = scn.build_f()
    assert f.in_dim == scn.x0.size
    if scn.multifunction is None or scn.multifunction["kind"] != "product-level":
        F = scn.build_sum()
        assert F.G.m == f.out_dim


def test_expectations_reference_builtins():
    names = set(builtin_names())
    cases = load_expectations()
    assert len(cases) >= 10
    assert all(c["scenario"] in names for c in cases)
    assert {c["command"] for c in cases} == {"certify", "verify-image", "regmod", "optimize"}


def test_file_path(tmp_path):
    p = tmp_path / "mine.toml"
    p.write_text('x0 = [0.1]\n[map]\nkind = "linear"\nmatrix = [[2.0]]\n')
    scn = load_scenario(p)
    assert scn.name == "mine" and scn.single_valued


def test_malformed(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("x0 = [0.0\n")
    with pytest.raises(ScenarioError):
        load_scenario(p)


def test_unknown_name():
    with pytest.raises(ScenarioError):
        load_scenario("no-such-scenario")


@pytest.mark.parametrize("patch", [
    {"x0": [0.0, 0.0, 0.0]},
    {"space": {"dim": 3}},
    {"map": {"kind": "linear", "matrix": [[1.0]], "radius": 1.0}},
    {"map": {"kind": "cubic"}},
    {"x0": [2.0, 0.0]},
    {"bogus": 1},
    {"radii": {"rho": 1.0}},
    {"multifunction": {"kind": "linear", "M": [[1.0, 0.0, 0.0]]}},
    {"multifunction": {"kind": "spiral"}},
    {"cone": {"generators": [[1.0, 0.0, 0.0]]}},
    {"x0": "origin"},
])
def test_rejected(patch):
    with pytest.raises(ScenarioError):
        Scenario.from_dict({**BASE, **patch})


def test_product_level_has_no_sum():
    with pytest.raises(ScenarioError):
        load_scenario("counterexample-y1y2").build_sum()


def test_round_trip():
    scn = load_scenario("box-sum")
    again = Scenario.from_dict(scn.to_dict())
    assert again.to_dict() == scn.to_dict()
    assert np.array_equal(again.x0, scn.x0)
