"""Stored maps, control profiles, and trend-based coarseness checks."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsekit.maps import (TREND_NOTE, CoarseMapData, Refuted, certify_coarse,
                            closeness, closeness_trend, compose, constant_map,
                            control_profile, default_radii, fibres_of,
                            identity_map, is_relative_coarse, profile_to_csv)
from coarsekit.metric import build_grid_space, point_space, ray_grid


@pytest.fixture
def ray():
    return ray_grid(16.0, 0.5)


def brute_profile(f, radii):
    """O(n^2) referee for control_profile."""
    n = f.source.n
    D = np.stack([f.source.distances_from(a) for a in range(n)])
    T = np.stack([f.target.distances_from(a) for a in range(f.target.n)])
    out = []
    for r in radii:
        mask = D <= r + 1e-9
        out.append(T[f.assignment[:, None], f.assignment[None, :]][mask].max())
    return out


def test_identity_profile_is_the_radius(ray):
    f = identity_map(ray)
    prof = control_profile(f, [1.0, 2.0, 4.0])
    assert prof.exhaustive
    assert [b for _, b in prof.rows()] == [1.0, 2.0, 4.0]


def test_constant_profile_is_zero(ray):
    f = constant_map(ray, ray, 0)
    prof = control_profile(f, [1.0, 4.0])
    assert [b for _, b in prof.rows()] == [0.0, 0.0]


def test_profile_matches_brute_force():
    sp = build_grid_space(2, 2.0, 1.0)
    rng = np.random.default_rng(5)
    f = CoarseMapData(sp, sp, rng.integers(0, sp.n, sp.n))
    radii = [1.0, 2.0, 3.0]
    prof = control_profile(f, radii)
    assert [b for _, b in prof.rows()] == pytest.approx(brute_profile(f, radii))


def test_profile_at_uses_next_sampled_radius(ray):
    prof = control_profile(identity_map(ray), [1.0, 2.0, 4.0])
    assert prof.at(1.5) == 2.0     # rounded up to the next sampled radius
    assert prof.at(2.0) == 2.0
    with pytest.raises(ValueError, match="not sampled"):
        prof.at(8.0)


def test_profile_rejects_bad_radii(ray):
    f = identity_map(ray)
    with pytest.raises(ValueError):
        control_profile(f, [])
    with pytest.raises(ValueError):
        control_profile(f, [2.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        control_profile(f, [0.0, 1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_profile_bounds_nondecreasing(seed):
    sp = ray_grid(8.0, 1.0)
    rng = np.random.default_rng(seed)
    f = CoarseMapData(sp, sp, rng.integers(0, sp.n, sp.n))
    prof = control_profile(f, [1.0, 2.0, 4.0, 8.0])
    bounds = [b for _, b in prof.rows()]
    assert bounds == sorted(bounds)


def test_compose_applies_right_map_first(ray):
    n = ray.n
    g = CoarseMapData(ray, ray, np.roll(np.arange(n), 1))
    f = CoarseMapData(ray, ray, (n - 1) - np.arange(n))
    fg = compose(f, g)
    assert fg.assignment.tolist() == [(n - 1) - ((i - 1) % n)
                                      for i in range(n)]


def test_compose_type_mismatch(ray):
    other = ray_grid(16.0, 0.5)
    with pytest.raises(ValueError, match="mismatch"):
        compose(identity_map(ray), identity_map(other))


def test_fibres_partition_the_source(ray):
    rng = np.random.default_rng(11)
    f = CoarseMapData(ray, ray, rng.integers(0, 5, ray.n))
    fib = fibres_of(f)
    seen = np.concatenate(list(fib.values()))
    assert sorted(seen.tolist()) == list(range(ray.n))
    for tgt, ids in fib.items():
        assert (f.assignment[ids] == tgt).all()


def test_identity_is_coarse(ray):
    cert = certify_coarse(identity_map(ray))
    assert cert.certified
    assert TREND_NOTE in cert.notes


def test_collapse_to_point_is_refuted(ray):
    # preimage of every bounded ball is the whole ray: touches the
    # truncation shell at every scanned radius
    pt = point_space()
    cert = certify_coarse(constant_map(ray, pt, 0), truncation_radii=[1, 2, 4])
    assert cert.verdict == "refuted"
    assert cert.witness["point"] in ray.frontier
    assert all(row["touches_frontier"]
               for row in cert.parameters["table"])


def test_certify_coarse_table_tracks_preimage_radii(ray):
    cert = certify_coarse(identity_map(ray), truncation_radii=[1.0, 2.0])
    table = cert.parameters["table"]
    assert table[0]["preimage_radius"] == pytest.approx(1.0)
    assert table[1]["preimage_radius"] == pytest.approx(2.0)


def test_closeness_of_shift(ray):
    f = identity_map(ray)
    shifted = np.minimum(np.arange(ray.n) + 2, ray.n - 1)
    g = CoarseMapData(ray, ray, shifted)
    assert closeness(f, g) == pytest.approx(1.0)   # two steps of 0.5


def test_closeness_is_symmetric(ray):
    rng = np.random.default_rng(2)
    f = CoarseMapData(ray, ray, rng.integers(0, ray.n, ray.n))
    g = CoarseMapData(ray, ray, rng.integers(0, ray.n, ray.n))
    assert closeness(f, g) == pytest.approx(closeness(g, f))


def test_closeness_requires_same_spaces(ray):
    other = ray_grid(16.0, 0.5)
    with pytest.raises(ValueError):
        closeness(identity_map(ray), identity_map(other))


def test_closeness_trend_flags_growth(ray):
    f = identity_map(ray)
    doubled = np.minimum(np.arange(ray.n) * 2, ray.n - 1)
    g = CoarseMapData(ray, ray, doubled)
    sup, table, growing = closeness_trend(f, g)
    assert growing
    assert sup == pytest.approx(8.0)   # |2x - x| maxes at x = 8 (clamped top)


def test_closeness_trend_flat_for_close_maps(ray):
    f = identity_map(ray)
    g = CoarseMapData(ray, ray, np.minimum(np.arange(ray.n) + 1, ray.n - 1))
    sup, table, growing = closeness_trend(f, g)
    assert not growing
    assert sup == pytest.approx(0.5)


def test_relative_coarse_composite(ray):
    mid = ray_grid(16.0, 0.5)
    g = CoarseMapData(ray, mid, np.arange(ray.n))
    f = identity_map(mid)
    cert = is_relative_coarse(g, f)
    assert cert.certified
    assert "composite_profile" in cert.parameters


def test_default_radii_cover_the_space(ray):
    radii = default_radii(ray)
    assert radii[0] == 1.0
    assert radii[-1] >= ray.eccentricity()


def test_profile_csv_format(ray):
    prof = control_profile(identity_map(ray), [1.0, 2.0])
    text = profile_to_csv(prof)
    assert text.splitlines()[0] == "radius,bound"
    assert text.splitlines()[1] == "1,1"


def test_assignment_validation(ray):
    with pytest.raises(ValueError):
        CoarseMapData(ray, ray, np.zeros(3, dtype=int))
    bad = np.zeros(ray.n, dtype=int)
    bad[0] = ray.n + 5
    with pytest.raises(ValueError):
        CoarseMapData(ray, ray, bad)


def test_refuted_carries_witness():
    err = Refuted("boom", witness={"x": 1}, details={"why": "test"})
    assert err.witness == {"x": 1}
    assert err.details["why"] == "test"
