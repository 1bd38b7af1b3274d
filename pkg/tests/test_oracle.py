"""The angle-arithmetic winding referee."""

import numpy as np
import pytest

from coarsekit import instances, oracle
from coarsekit.cones import cone_interval
from coarsekit.lifting import LoopMap, RayMap
from coarsekit.metric import ray_grid


def test_column_windings_are_exact_on_long_columns(circle_instance):
    loop = instances.winding_loop(circle_instance, 3, x_max=8.0)
    w = oracle.column_windings(loop)
    # every column from half the range up tracks the true count
    n = len(w)
    assert (w[n // 2:] == 3).all()


def test_short_columns_alias_but_the_consensus_holds(circle_instance):
    # winding 5 on a short range: the first columns take angular steps
    # beyond half a lap and alias, the consensus report says 5 anyway
    loop = instances.winding_loop(circle_instance, 5, x_max=8.0)
    rep = oracle.winding_report(loop)
    assert rep["consensus"] == 5
    assert rep["agreement"] >= 0.9
    assert len(rep["windings"]) == loop.cylinder.base.n
    assert oracle.classify_windings(loop) == (5,)


def test_torus_axes_are_tracked_independently(torus_instance):
    loop = instances.winding_loop(torus_instance, (2, -1), x_max=8.0)
    assert oracle.classify_windings(loop) == (2, -1)
    assert oracle.winding_report(loop, axis=1)["consensus"] == -1


def test_oracle_refuses_unwrapped_targets():
    line = ray_grid(4.0, 1.0)
    cyl = cone_interval(2.0, 1.0)
    loop = LoopMap(cyl, line, np.zeros(cyl.n, dtype=np.int64),
                   RayMap(line, np.zeros(cyl.base.n, dtype=np.int64), 1.0))
    with pytest.raises(ValueError, match="wrapped model"):
        oracle.column_windings(loop)


def test_degenerate_columns_count_zero(circle_instance):
    loop = instances.winding_loop(circle_instance, 4, x_max=6.0)
    w = oracle.column_windings(loop)
    assert w[0] == 0          # the single-point column at x = 0
    # a sideways nudge never breaks integrality: closed columns wind whole
    # laps by construction, so only the lap count itself can move
    cov = circle_instance
    bad = loop.assignment.copy()
    col = loop.cylinder.column(10)
    nlev = cov.down.nlev
    bad[col[3]] = ((bad[col[3]] // nlev + cov.down.ncol // 4)
                   % cov.down.ncol) * nlev + bad[col[3]] % nlev
    nudged = LoopMap(loop.cylinder, loop.target, bad, loop.base)
    w2 = oracle.column_windings(nudged)
    assert w2.dtype == np.int64
