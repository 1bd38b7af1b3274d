"""Canonical serialization: stable bytes, rounded floats, atomic writes."""

import json
import os

import numpy as np
import pytest

from coarsekit import reports
from coarsekit.actions import SoftnessTable
from coarsekit.cones import HeightFunction, PCylinder, cone_interval
from coarsekit.lifting import Homotopy, RayMap
from coarsekit.maps import Certification
from coarsekit.metric import BoundedSet, ray_grid


def test_dumps_sorts_keys_and_ends_with_newline():
    text = reports.dumps({"b": 1, "a": 2})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 2, "b": 1}


def test_floats_are_rounded_to_twelve_significant_digits():
    assert reports.round_sig(0.1 + 0.2) == 0.3
    assert reports.round_sig(1 / 3) == 0.333333333333
    text = reports.dumps({"v": 0.1 + 0.2})
    assert '"v": 0.3' in text


def test_numpy_values_serialize_as_plain_json():
    obj = {"i": np.int64(3), "f": np.float64(0.5), "b": np.bool_(True),
           "a": np.arange(3)}
    assert reports.canonical(obj) == {"i": 3, "f": 0.5, "b": True,
                                      "a": [0, 1, 2]}


def test_result_objects_flatten():
    cert = Certification("certified", witness=None,
                         parameters={"x": np.float64(1.0)})
    flat = reports.canonical(cert)
    assert flat["verdict"] == "certified"
    assert flat["parameters"] == {"x": 1.0}
    line = ray_grid(4.0, 1.0)
    ball = BoundedSet(line, 0, 2.0)
    assert reports.canonical(ball) == {"center": 0, "radius": 2.0,
                                       "empty": False}


def test_write_json_is_atomic_and_reproducible(tmp_path):
    path = tmp_path / "r.json"
    payload = {"seed": 0, "values": [0.1 + 0.2, 1 / 3]}
    reports.write_json(path, payload)
    first = path.read_bytes()
    reports.write_json(path, payload)
    assert path.read_bytes() == first
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]


def test_csv_uses_dot_decimals():
    text = reports.csv_text(["a", "b"], [(0.5, 1), (1 / 3, 2)])
    lines = text.splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "0.5,1"
    assert lines[2] == "0.333333333333,2"


def test_softness_csv_round_trips_the_table():
    table = SoftnessTable(np.array([1.0, 2.0]), np.array([1.25, 2.25]),
                          [None, None])
    text = reports.softness_csv(table)
    assert text == "R,S\n1,1.25\n2,2.25\n"


def test_bounds_csv_sorts_families():
    text = reports.bounds_csv({"vertical": 0.5, "mixed": 0.25})
    assert text.splitlines() == ["family,worst_ratio", "mixed,0.25",
                                 "vertical,0.5"]


def test_homotopy_csv_needs_planar_base_coordinates():
    cyl = cone_interval(2.0, 1.0)
    icyl = PCylinder(cyl.space, HeightFunction.constant(cyl.space, 0.0), 1.0)
    line = ray_grid(4.0, 1.0)
    H = Homotopy(icyl, line, np.zeros(icyl.n, dtype=np.int64))
    text = reports.homotopy_csv(H)
    assert text.splitlines()[0] == "x,t,s,target_point"

    ray_cyl = PCylinder(line, HeightFunction.constant(line, 0.0), 1.0)
    flat = Homotopy(ray_cyl, line, np.zeros(ray_cyl.n, dtype=np.int64))
    with pytest.raises(ValueError, match="no \\(x, t\\)"):
        reports.homotopy_csv(flat)


def test_ray_csv_lists_the_grid():
    line = ray_grid(4.0, 1.0)
    ray = RayMap(line, np.array([0, 1, 2]), 0.5)
    assert reports.ray_csv(ray) == "t,target_point\n0,0\n0.5,1\n1,2\n"
