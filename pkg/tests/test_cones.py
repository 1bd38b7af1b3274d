"""Cones over flat models, p-cylinders, and the distance inequalities."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsekit.cones import (HeightFunction, PCylinder, check_cat0_convexity,
                             check_cone_inequalities, circle_model,
                             cone_descriptor, cone_from_descriptor,
                             cone_interval, geodesic_point, line_model,
                             metric_cone, p_cylinder, plane_model, torus_model)
from coarsekit.metric import ray_grid


def circle_cone_distance(cone, a, b):
    """Independent closed form for circle-cone graph distances.

    A shortest path descends to one level, walks there, and climbs back:
    cost(t_j) = (t - t_j) + (t' - t_j) + hops * mesh * t_j is linear in
    t_j, so the optimum sits at an extreme -- either the lower of the two
    endpoint levels or the bottom of the cone.
    """
    mesh = cone.model.mesh
    ncol = cone.ncol
    t0, t1 = cone.level_value(a), cone.level_value(b)
    hops = abs(cone.col_of(a) - cone.col_of(b))
    hops = min(hops, ncol - hops)
    walk_high = abs(t0 - t1) + hops * mesh * min(t0, t1)
    walk_low = t0 + t1 - 2.0 + hops * mesh * 1.0
    return min(walk_high, walk_low)


@pytest.fixture(scope="module")
def small_cone():
    return metric_cone(circle_model(1.0, 0.25), 8.0, 0.5)


def test_circle_cone_matches_closed_form(small_cone):
    rng = np.random.default_rng(0)
    n = small_cone.space.n
    for a in rng.choice(n, size=12, replace=False):
        row = small_cone.space.distances_from(int(a))
        for b in rng.choice(n, size=40, replace=False):
            want = circle_cone_distance(small_cone, int(a), int(b))
            assert row[b] == pytest.approx(want, abs=1e-9)


def test_deck_shift_displacement_formula():
    # moving one full downstairs circumference at level t costs
    # min(t * circ, over-the-bottom) -- the quantity the scatter tables
    # are built from
    cone = metric_cone(circle_model(4.0, 0.25), 8.0, 0.5)
    hops = round(1.0 / 0.25)             # one unit of arc
    for lev in (0, 4, 14):
        a = cone.id_at(0, lev)
        b = cone.id_at(hops, lev)
        t = cone.level_value(a)
        want = min(t * 1.0, 2.0 * (t - 1.0) + 1.0)
        assert cone.space.distance(a, b) == pytest.approx(want)


def test_vertical_edges_are_exact(small_cone):
    a = small_cone.id_at(1, 0)
    b = small_cone.id_at(1, small_cone.nlev - 1)
    assert small_cone.space.distance(a, b) == pytest.approx(
        small_cone.t_max - 1.0)


def test_cone_inequalities_certify(small_cone):
    cert = check_cone_inequalities(small_cone, 2000, 0.10, seed=0)
    assert cert.certified
    ratios = cert.parameters["worst_ratios"]
    assert set(ratios) == {"upper", "vertical", "model"}
    assert all(v <= 1.10 for v in ratios.values())
    assert cert.parameters["pairs_checked"] >= 2000


def test_cone_inequalities_refute_when_impossible(small_cone):
    # zero tolerance on a discretized cone must fail; the witness names
    # the violated inequality and the offending pair
    cert = check_cone_inequalities(small_cone, 2000, -0.5, seed=0)
    assert cert.verdict == "refuted"
    assert cert.witness["inequality"] in ("upper", "vertical", "model")
    assert cert.witness["ratio"] > 0.5


def test_torus_cone_octile_ratio():
    # king-move meshes approximate the flat metric within ~8.24%:
    # the model inequality survives the 10% tolerance in 2-D
    cone = metric_cone(torus_model(2.0, 2.0, 0.25), 4.0, 0.5)
    cert = check_cone_inequalities(cone, 1500, 0.10, seed=1)
    assert cert.certified
    assert cert.parameters["worst_ratios"]["model"] <= 1.0824 + 1e-6


def test_cat0_convexity_on_plane():
    cert = check_cat0_convexity(plane_model(10.0, 10.0), 5000, seed=0)
    assert cert.certified
    assert cert.parameters["worst_margin"] <= 1e-9


def test_cat0_needs_hadamard():
    with pytest.raises(ValueError):
        check_cat0_convexity(circle_model(1.0, 0.25), 100)


def test_geodesic_point_plane():
    model = plane_model(4.0, 1.0)
    x = np.array([0.0, 0.0])
    p = np.array([3.0, 4.0])
    mid = geodesic_point(model, x, p, 2.5)
    assert np.allclose(mid, [1.5, 2.0])
    # clamped at arrival
    assert np.allclose(geodesic_point(model, x, p, 99.0), p)


def test_geodesic_point_rejects_compact_models():
    with pytest.raises(ValueError):
        geodesic_point(circle_model(1.0, 0.25), [0.0], [0.4], 0.1)


def test_circle_model_wrap_distance():
    model = circle_model(1.0, 0.125)
    assert model.d([0.0], [0.875])[0] == pytest.approx(0.125)
    assert model.d([0.125], [0.625])[0] == pytest.approx(0.5)


def test_snap_index_roundtrip():
    model = circle_model(1.0, 0.125)
    coords = model.mesh_coords()
    for i, c in enumerate(coords):
        assert model.snap_index(c) == i
    assert model.snap_index([0.99]) == 0          # wraps to the seam
    assert model.snap_index([-0.125]) == 7


def test_interpolate_wraps_the_short_way():
    model = circle_model(1.0, 0.125)
    out = model.interpolate([0.875], [0.125], 0.5)
    assert out[0] == pytest.approx(0.0)
    # antipodal tie breaks toward the negative direction
    tie = model.interpolate([0.0], [0.5], 0.5)
    assert tie[0] == pytest.approx(0.75)


def test_mesh_edges_1d_chain_and_wrap():
    circle = circle_model(1.0, 0.25)
    edges = circle.mesh_edges()
    assert len(edges) == 4                         # 3 chain + 1 wrap
    line = line_model(1.0, 0.5)
    assert len(line.mesh_edges()) == 4             # 5 points, open chain


def test_torus_mesh_is_king_move():
    model = torus_model(1.0, 1.0, 0.5)
    edges = model.mesh_edges()
    assert len(edges) == 4 * 4                     # 2x2 wrapped, 4 dirs each
    diag = [w for _, _, w in edges if w > 0.5]
    assert all(w == pytest.approx(0.5 * math.sqrt(2)) for w in diag)


# ---------------------------------------------------------------------------
# p-cylinders


def test_cone_interval_frozen_shape():
    ci = cone_interval(4.0, 1.0)
    assert ci.n == 15
    assert ci.col_len.tolist() == [1, 2, 3, 4, 5]
    assert ci.space.coords[ci.i1_ids[3]].tolist() == [3.0, 3.0]
    assert ci.space.coords[ci.i0_ids[3]].tolist() == [3.0, 0.0]
    assert set(ci.boundary_ids) >= set(ci.i0_ids) | set(ci.i1_ids)


def test_cylinder_metric_is_l2_combination():
    base = ray_grid(4.0, 1.0)
    cyl = p_cylinder(base, HeightFunction.constant(base, 2.0), 1.0)
    a = cyl.id_at(0, 1.0)
    b = cyl.id_at(3, 3.0)
    want = math.hypot(base.distance(0, 3), 2.0)
    assert cyl.space.distance(a, b) == pytest.approx(want)


def test_i0_is_isometric_and_levels_are_isometric():
    base = ray_grid(4.0, 0.5)
    cyl = p_cylinder(base, HeightFunction.constant(base, 1.0), 0.5)
    for x, y in [(0, 3), (2, 7), (1, 8)]:
        d_base = base.distance(x, y)
        assert cyl.space.distance(cyl.i0_ids[x],
                                  cyl.i0_ids[y]) == pytest.approx(d_base)
        a = cyl.id_at(x, 1.0)
        b = cyl.id_at(y, 1.0)
        assert cyl.space.distance(a, b) == pytest.approx(d_base)


def test_vertical_distance_is_height_gap():
    base = ray_grid(4.0, 0.5)
    cyl = p_cylinder(base, HeightFunction.constant(base, 2.0), 0.5)
    assert cyl.space.distance(cyl.id_at(2, 0.0),
                              cyl.id_at(2, 2.0)) == pytest.approx(2.0)


def test_height_validation():
    base = ray_grid(2.0, 1.0)
    with pytest.raises(ValueError, match=">= -1"):
        HeightFunction(base, np.full(base.n, -1.5))
    with pytest.raises(ValueError):
        HeightFunction(base, np.zeros(base.n + 1))


def test_column_bookkeeping():
    ci = cone_interval(4.0, 1.0)
    for x in range(5):
        col = ci.column(x)
        assert len(col) == ci.col_len[x]
        assert ci.top_t(x) == pytest.approx(float(x))
        assert ci.id_at(x, 0.0) == ci.i0_ids[x]
    with pytest.raises(KeyError):
        ci.id_at(2, 3.0)


def test_cylinder_frontier_inherits_base():
    base = ray_grid(4.0, 1.0)
    cyl = p_cylinder(base, HeightFunction.constant(base, 1.0), 1.0)
    frontier_bases = {int(cyl.point_base[i]) for i in cyl.space.frontier}
    assert frontier_bases == {4}


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 6.0), st.floats(0.25, 1.0))
def test_cone_interval_column_law(extent, step):
    # the column over x holds the t-grid of [0, x]: length floor(x/step)+1,
    # topping out at the largest grid level <= x
    ci = cone_interval(extent, step)
    xs = ci.base.coords[:, 0]
    want = [int(math.floor(x / step + 1e-9)) + 1 for x in xs]
    assert ci.col_len.tolist() == want
    tops = ci.space.coords[ci.i1_ids, 1]
    assert (tops <= xs + 1e-9).all()
    assert (xs - tops < step - 1e-9).all()


def test_cone_descriptor_roundtrip(small_cone):
    back = cone_from_descriptor(cone_descriptor(small_cone))
    assert back.space.n == small_cone.space.n
    rng = np.random.default_rng(4)
    for a in rng.choice(small_cone.space.n, size=5, replace=False):
        assert np.allclose(back.space.distances_from(int(a)),
                           small_cone.space.distances_from(int(a)))


def test_cone_needs_t_max_at_least_one():
    with pytest.raises(ValueError):
        metric_cone(circle_model(1.0, 0.25), 0.5, 0.25)


def test_cone_frontier_is_top_rim(small_cone):
    top = {small_cone.id_at(c, small_cone.nlev - 1)
           for c in range(small_cone.ncol)}
    assert top <= set(small_cone.space.frontier)
