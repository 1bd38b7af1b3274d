"""Desk-scale instances wired for the certification pipeline.

The covering instances use a wrapped stand-in for the universal cover: a
large circle (or torus) upstairs maps onto a unit one downstairs, with the
deck translations acting by column rotation.  Within the window where loops
and lifts live, the geometry is indistinguishable from the infinite cover,
and the wrap keeps every scan exhaustive.

Also here: the loop that drives the contraction bounds, the synthetic
homotopy for the boundary fix, and the profile-honoring test map for the
reparametrization check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import GroupAction, build_lift_certificate
from .cones import (HeightFunction, PCylinder, circle_model, cone_interval,
                    metric_cone, plane_model, torus_model)
from .homotopies import (LevelLipschitzProfile, _snap_cols,
                         reparametrize_to_lipschitz)
from .lifting import Homotopy, LoopMap, RayMap
from .maps import CoarseMapData, compose
from .metric import ray_grid


@dataclass
class CoverInstance:
    """A certified-covering workbench: cones, projection, deck action."""

    up: object                  # ConeSpace upstairs
    down: object                # ConeSpace downstairs
    pi: CoarseMapData           # projection upstairs -> downstairs
    action: GroupAction         # deck transformations upstairs
    b_prime: RayMap             # upstairs ray over the basepoint column

    def downstairs_ray(self):
        """b = pi o b'."""
        return RayMap(self.down.space, self.pi.assignment[self.b_prime.assignment],
                      self.b_prime.t_step)

    def certificate(self, R_grid=(1.0, 2.0, 4.0, 8.0)):
        return build_lift_certificate(self.pi, R_grid, action=self.action)


def _projection(up, down, wrap):
    """Column-wise angle reduction (mod the downstairs circumferences)."""
    theta = up.col_coords % np.asarray(wrap)[None, :]
    dcols = _snap_cols(down.model, theta)
    ids = np.arange(up.space.n)
    assign = dcols[ids // up.nlev] * down.nlev + ids % up.nlev
    return CoarseMapData(up.space, down.space, assign)


def _rotation_perm(cone, axis, cols_shift):
    """Permutation rotating the model by ``cols_shift`` mesh columns."""
    ids = np.arange(cone.space.n)
    cols = ids // cone.nlev
    axes = cone.model._axes()
    if cone.model.dim == 1:
        newcols = (cols + cols_shift) % cone.ncol
    else:
        na, nb = len(axes[0]), len(axes[1])
        i, j = cols // nb, cols % nb
        if axis == 0:
            i = (i + cols_shift) % na
        else:
            j = (j + cols_shift) % nb
        newcols = i * nb + j
    return newcols * cone.nlev + ids % cone.nlev


def circle_cover(up_circumference=12.0, down_circumference=1.0, mesh=0.125,
                 t_max=16.0, t_step=0.25):
    """Big circle over the unit circle; deck group = rotations by 1.

    The downstairs mesh bounds the angular wobble of snapped loops (one
    column hop costs mesh * level), which is what keeps the marching
    budget and the same-height spread inside the certificate's R grid.
    """
    up = metric_cone(circle_model(up_circumference, mesh), t_max, t_step)
    down = metric_cone(circle_model(down_circumference, mesh), t_max, t_step)
    pi = _projection(up, down, (down_circumference,))
    shift = int(round(down_circumference / mesh))
    perm = _rotation_perm(up, 0, shift)
    action = GroupAction(up.space, [perm], kind="lattice", names=["rot"])
    col0 = up.model.snap_index([0.0])
    b_prime = RayMap(up.space,
                     np.array([up.id_at(col0, k) for k in range(up.nlev)]),
                     t_step)
    return CoverInstance(up, down, pi, action, b_prime)


def torus_cover(up_circumferences=(6.0, 6.0), down_circumferences=(1.0, 1.0),
                mesh=0.25, t_max=9.0, t_step=0.25):
    """Big torus over the unit torus; deck group = Z^2 column rotations."""
    up = metric_cone(torus_model(*up_circumferences, mesh), t_max, t_step)
    down = metric_cone(torus_model(*down_circumferences, mesh), t_max, t_step)
    pi = _projection(up, down, down_circumferences)
    perms = [_rotation_perm(up, ax, int(round(down_circumferences[ax] / mesh)))
             for ax in (0, 1)]
    action = GroupAction(up.space, perms, kind="lattice", names=["a", "b"])
    col0 = up.model.snap_index([0.0, 0.0])
    b_prime = RayMap(up.space,
                     np.array([up.id_at(col0, k) for k in range(up.nlev)]),
                     t_step)
    return CoverInstance(up, down, pi, action, b_prime)


def winding_loop(cover, winding, x_max=8.0, step=None):
    """Loop downstairs that winds ``winding`` times per lap of the column.

    alpha(x, t) sits at angle winding * t/x (mod 1 lap) and level 1 + x, so
    the i0 and i1 edges both land on the basepoint column: a genuine loop
    at every column height.  ``winding`` is an int for circle covers or an
    int pair for torus covers.
    """
    down = cover.down
    if step is None:
        step = down.t_step
    cyl = cone_interval(x_max, step)
    x = cyl.space.coords[:, 0]
    t = cyl.space.coords[:, 1]
    wind = np.atleast_1d(np.asarray(winding, dtype=float))
    circ = np.asarray(down.model.circumferences)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(x[:, None] > 0,
                        wind[None, :] * t[:, None] / np.maximum(x[:, None], 1e-12),
                        0.0)
    theta = (frac % 1.0) * circ[None, :]
    cols = _snap_cols(down.model, theta)
    lev = np.clip(np.rint(x / down.t_step).astype(np.int64), 0, down.nlev - 1)
    assign = cols * down.nlev + lev
    base = RayMap(down.space, assign[cyl.i0_ids], step)
    return LoopMap(cyl, down.space, assign, base,
                   meta={"winding": tuple(int(w) for w in np.atleast_1d(winding))})


def contraction_loop(x_max=36.0, step=0.5, mesh=1 / 64, t_step=0.25,
                     level_rate=1 / 8, extent=1.25):
    """Unit-speed circles shrinking into a plane cone, for the bound scan.

    At column x the track circles the origin once at radius
    x / (2 pi (1 + x * level_rate)) and level 1 + x * level_rate: the t-speed
    is exactly 1 and the cross-column drift is small, so the loop is
    Lipschitz-normalized the way the contraction's increments expect.
    Returns (alpha, p) with p the cone point the contraction aims at.
    """
    model = plane_model(extent, mesh)
    cone = metric_cone(model, 1.0 + x_max * level_rate, t_step)
    cyl = cone_interval(x_max, step)
    x = cyl.space.coords[:, 0]
    t = cyl.space.coords[:, 1]
    u = 1.0 + x * level_rate
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(x > 0, x / (2 * math.pi * u), 0.0)
        th = np.where(x > 0, 2 * math.pi * t / np.maximum(x, 1e-12), 0.0)
    Y = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    cols = _snap_cols(model, Y)
    lev = np.clip(np.rint((u - 1.0) / t_step).astype(np.int64), 0,
                  cone.nlev - 1)
    assign = cols * cone.nlev + lev
    base = RayMap(cone.space, assign[cyl.i0_ids], step)
    alpha = LoopMap(cyl, cone.space, assign, base)
    return alpha, (0.0, 0.0)


def boundary_fix_instance(x_max=12.0, step=0.5, value_step=0.25):
    """Synthetic unit-slope homotopy into a line grid with matching edges.

    H((x,t), s) follows (x + 4t(x-t)/x) (1 - s/x) + (x+2) s/x: a bump that
    is symmetric in t (so the matching condition H((x,0),s) = H((x,x),s)
    holds exactly) and slides toward the ray x + 2 as s runs to x.
    """
    cyl = cone_interval(x_max, step)
    xvals = cyl.space.coords[:, 0]
    icyl = PCylinder(cyl.space, HeightFunction(cyl.space, xvals - 1.0), step)
    line = ray_grid(2.0 * x_max + 3.0, value_step)
    b = icyl.point_base
    x = xvals[b]
    t = cyl.space.coords[b, 1]
    s = icyl.point_t
    with np.errstate(invalid="ignore", divide="ignore"):
        bump = np.where(x > 0, x + 4.0 * t * (x - t) / np.maximum(x, 1e-12),
                        0.0)
        v = np.where(x > 0,
                     bump * (1.0 - s / np.maximum(x, 1e-12))
                     + (x + 2.0) * s / np.maximum(x, 1e-12),
                     0.0)
    ids = np.clip(np.rint(v / value_step).astype(np.int64), 0, line.n - 1)
    return Homotopy(icyl, line, ids, meta={"synthetic_bump": True})


def reparametrization_instance(step=0.5, value_step=1 / 128, levels=6):
    """The L_K = K profile, its reparametrization, and a map honoring it.

    The test map f(x, t) = x^2 / 2 into a fine line grid has slope x, hence
    is K-Lipschitz exactly on the columns up to K.  Returns a dict with the
    profile, the reparametrization and its certificate, the c([0,1]) grid,
    and the maps f, g, and f o g.
    """
    profile = LevelLipschitzProfile.from_values(list(range(1, levels + 1)))
    rep, cert = reparametrize_to_lipschitz(profile)
    x_max = float(rep.knots_x[-1])
    cyl = cone_interval(x_max, step)
    x = cyl.space.coords[:, 0]
    line = ray_grid(x_max ** 2 / 2.0 + 1.0, value_step)
    f_ids = np.clip(np.rint((x ** 2 / 2.0) / value_step).astype(np.int64),
                    0, line.n - 1)
    f = CoarseMapData(cyl.space, line, f_ids)
    g = rep.as_grid_map(cyl)
    return {"profile": profile, "reparametrization": rep,
            "certificate": cert, "cylinder": cyl, "f": f, "g": g,
            "fg": compose(f, g)}
