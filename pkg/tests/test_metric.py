"""Metric backends: grids, rays, geodesic graphs, bounded sets."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsekit.metric import (EPS, BoundedSet, ball, build_grid_space,
                              load_edge_list, load_space, outside,
                              point_space, ray_grid, save_space,
                              space_from_descriptor, space_from_edges,
                              space_to_descriptor)


def bellman_ford(n, edges, source):
    """Plain O(V*E) relaxation; the referee for the dijkstra backend."""
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    und = [(i, j, w) for i, j, w in edges] + [(j, i, w) for i, j, w in edges]
    for _ in range(n):
        changed = False
        for i, j, w in und:
            if dist[i] + w < dist[j] - 1e-15:
                dist[j] = dist[i] + w
                changed = True
        if not changed:
            break
    return dist


@pytest.fixture
def wheel():
    # hub 0, rim 1..6, spokes weight 1, rim edges weight 0.8
    edges = [(0, k, 1.0) for k in range(1, 7)]
    edges += [(k, k % 6 + 1, 0.8) for k in range(1, 7)]
    return space_from_edges(7, edges)


def test_graph_distances_match_bellman_ford(wheel):
    edges = wheel.meta["edges"]
    for src in range(wheel.n):
        expect = bellman_ford(wheel.n, edges, src)
        got = wheel.distances_from(src)
        assert np.allclose(got, expect)


def test_distance_row_is_readonly_cache(wheel):
    row = wheel.distances_from(0)
    with pytest.raises(ValueError):
        row[0] = 5.0
    assert wheel.distances_from(0) is row


def test_grid_space_is_euclidean():
    sp = build_grid_space(2, 2.0, 0.5)
    assert sp.n == 25
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.integers(0, sp.n, size=2)
        want = np.linalg.norm(sp.coords[a] - sp.coords[b])
        assert sp.distance(a, b) == pytest.approx(want)


def test_grid_frontier_is_outer_shell():
    sp = build_grid_space(2, 2.0, 1.0)
    inner = [i for i in range(sp.n) if i not in sp.frontier]
    # only the middle point of a 3x3 grid is interior
    assert len(inner) == 1
    assert np.allclose(sp.coords[inner[0]], [1.0, 1.0])


def test_ray_frontier_is_far_end_only():
    ray = ray_grid(8.0, 0.5)
    assert ray.n == 17
    assert ray.frontier == {16}
    assert ray.basepoint == 0
    assert ray.distance(0, 16) == pytest.approx(8.0)


def test_point_space():
    pt = point_space()
    assert pt.n == 1
    assert pt.distance(0, 0) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.data())
def test_metric_axioms_on_random_graphs(n, data):
    m = data.draw(st.integers(n - 1, n * 2))
    edges = []
    for k in range(m):
        i = data.draw(st.integers(0, n - 1))
        j = data.draw(st.integers(0, n - 1))
        w = data.draw(st.floats(0.1, 5.0, allow_nan=False))
        if i != j:
            edges.append((i, j, w))
    edges += [(k, k + 1, 1.0) for k in range(n - 1)]  # keep it connected
    sp = space_from_edges(n, edges)
    D = np.stack([sp.distances_from(a) for a in range(n)])
    assert np.allclose(D, D.T)
    assert np.allclose(np.diag(D), 0.0)
    assert (D[~np.eye(n, dtype=bool)] > 0).all()
    # triangle inequality, all triples
    assert (D[:, None, :] + D[None, :, :] >= D[:, :, None] - 1e-9).all()


def test_ball_members_frozen():
    ray = ray_grid(8.0, 0.5)
    b = ball(ray, ray.basepoint, 1.5)
    assert b.members().tolist() == [0, 1, 2, 3]
    assert b.contains(3) and not b.contains(4)


def test_ball_outside_partition(wheel):
    b = ball(wheel, 0, 1.0)
    out = outside(wheel, b)
    both = np.concatenate([b.members(), out])
    assert sorted(both.tolist()) == list(range(wheel.n))


def test_empty_bounded_set(wheel):
    e = BoundedSet.empty(wheel)
    assert e.is_empty
    assert e.members().size == 0
    assert not e.contains(0)


def test_negative_radius_rejected(wheel):
    with pytest.raises(ValueError):
        ball(wheel, 0, -1.0)


def test_min_distances_is_pointwise_min(wheel):
    rows = np.minimum(wheel.distances_from(1), wheel.distances_from(4))
    assert np.allclose(wheel.min_distances([1, 4]), rows)


def test_distances_limited_masks_far_points(wheel):
    row = wheel.distances_limited(0, 1.0)
    full = wheel.distances_from(0)
    near = full <= 1.0
    assert np.allclose(row[near], full[near])
    assert np.isinf(row[~near]).all()


def test_eccentricity_matches_row_max(wheel):
    assert wheel.eccentricity(0) == pytest.approx(wheel.distances_from(0).max())


def test_space_descriptor_roundtrip_grid(tmp_path):
    sp = build_grid_space(2, 2.0, 0.5)
    back = space_from_descriptor(space_to_descriptor(sp))
    assert back.n == sp.n
    assert np.allclose(back.coords, sp.coords)
    assert back.frontier == sp.frontier


def test_save_load_roundtrip_edges(tmp_path, wheel):
    path = tmp_path / "wheel.json"
    save_space(path, wheel)
    back = load_space(path)
    assert back.n == wheel.n
    for src in range(wheel.n):
        assert np.allclose(back.distances_from(src),
                           wheel.distances_from(src))
    # the file itself is deterministic
    text = path.read_text()
    save_space(path, wheel)
    assert path.read_text() == text


def test_edge_list_text_roundtrip(wheel):
    from coarsekit.metric import dump_edge_list
    back = load_edge_list(dump_edge_list(wheel))
    assert back.n == wheel.n
    assert np.allclose(back.distances_from(0), wheel.distances_from(0))


def test_edge_list_rejects_malformed():
    with pytest.raises(ValueError, match="line 2"):
        load_edge_list("0 1 1.0\n0 1\n")


def test_unknown_point_raises(wheel):
    with pytest.raises(KeyError):
        wheel.distances_from(99)
