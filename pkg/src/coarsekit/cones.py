"""p-cylinders, flat manifold models, and discretized metric cones.

Cylinders carry the exact l2 product metric computed from the base oracle.
Cones over a model M are geodesic graphs on mesh(M) x {1, 1+dt, ..., t_max}:
horizontal edges at level t weigh t * d_M(neighbours), vertical edges weigh
dt.  1-D models use chain stencils; 2-D models use 8-neighbour stencils so
that horizontal graph distances stay within ~8.3% of t * d_M (a 4-neighbour
stencil would be off by up to sqrt(2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .maps import Certification
from .metric import EPS, MetricSpace

# ---------------------------------------------------------------------------
# manifold models


@dataclass(frozen=True)
class ManifoldModel:
    """Flat model manifold: circle, flat-torus, euclidean-line or -plane."""

    kind: str
    mesh: float
    circumferences: tuple = ()   # circle / flat-torus
    extent: float = 0.0          # euclidean-line / -plane window [-extent, extent]

    @property
    def is_hadamard(self):
        return self.kind in ("euclidean-line", "euclidean-plane")

    @property
    def dim(self):
        return 2 if self.kind in ("flat-torus", "euclidean-plane") else 1

    def _axes(self):
        if self.kind == "circle":
            c = self.circumferences[0]
            return [np.arange(0.0, c - self.mesh / 2, self.mesh)]
        if self.kind == "flat-torus":
            return [np.arange(0.0, c - self.mesh / 2, self.mesh)
                    for c in self.circumferences]
        n = round(self.extent / self.mesh)
        axis = np.arange(-n, n + 1) * self.mesh
        return [axis] * self.dim

    def mesh_coords(self):
        axes = self._axes()
        if self.dim == 1:
            return axes[0][:, None]
        a, b = axes
        return np.array([(x, y) for x in a for y in b])

    def d(self, A, B):
        """Vectorized model distance between coordinate arrays."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        diff = np.abs(A - B)
        if self.kind in ("circle", "flat-torus"):
            for k, c in enumerate(self.circumferences):
                diff[..., k] = np.minimum(diff[..., k], c - diff[..., k])
        return np.sqrt((diff ** 2).sum(axis=-1))

    def snap_index(self, coord):
        """Column index of the mesh point nearest to ``coord``."""
        coord = np.atleast_1d(np.asarray(coord, dtype=float))
        axes = self._axes()
        idx = []
        for k, axis in enumerate(axes):
            if self.kind in ("circle", "flat-torus"):
                c = self.circumferences[k]
                i = int(round((coord[k] % c) / self.mesh)) % len(axis)
            else:
                i = int(round((coord[k] - axis[0]) / self.mesh))
                i = min(max(i, 0), len(axis) - 1)
            idx.append(i)
        if self.dim == 1:
            return idx[0]
        return idx[0] * len(axes[1]) + idx[1]

    def mesh_edges(self):
        """Neighbour pairs (i, j, d_M): chain for 1-D, 8-neighbour for 2-D."""
        axes = self._axes()
        wrap = self.kind in ("circle", "flat-torus")
        if self.dim == 1:
            n = len(axes[0])
            edges = [(i, i + 1, self.mesh) for i in range(n - 1)]
            if wrap and n > 2:
                edges.append((n - 1, 0, self.mesh))
            return edges
        na, nb = len(axes[0]), len(axes[1])
        diag = self.mesh * math.sqrt(2.0)
        edges = []
        for i in range(na):
            for j in range(nb):
                here = i * nb + j
                for di, dj in ((0, 1), (1, 0), (1, 1), (1, -1)):
                    ii, jj = i + di, j + dj
                    if wrap:
                        ii, jj = ii % na, jj % nb
                    elif not (0 <= ii < na and 0 <= jj < nb):
                        continue
                    if wrap and (ii == i and jj == j):
                        continue
                    w = self.mesh if (di == 0 or dj == 0) else diag
                    edges.append((here, ii * nb + jj, w))
        return edges

    def as_space(self):
        """Closed-form MetricSpace on the mesh lattice."""
        coords = self.mesh_coords()
        if self.kind in ("circle", "flat-torus"):
            frontier = ()
        else:
            axes = self._axes()
            lo, hi = axes[0][0], axes[0][-1]
            on_edge = np.isclose(coords, lo) | np.isclose(coords, hi)
            frontier = np.flatnonzero(on_edge.any(axis=1))
        base = self.snap_index(np.zeros(self.dim))
        return MetricSpace("closed-form", coords, basepoint=base,
                           frontier=frontier, pair_fn=self.d,
                           meta={"model": self.kind, "mesh": self.mesh})

    def interpolate(self, a, b, frac):
        """Point a fraction ``frac`` of the way along a minimizing geodesic.

        On compact models the shorter wrap direction is used; exact ties go to
        the negative direction (the lexicographically smallest one).
        """
        a = np.atleast_1d(np.asarray(a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if self.kind in ("circle", "flat-torus"):
            out = np.empty_like(a)
            for k, c in enumerate(self.circumferences):
                delta = (b[k] - a[k]) % c
                if delta > c / 2 + EPS:
                    delta -= c
                elif abs(delta - c / 2) <= EPS:
                    delta = -c / 2      # antipodal tie: negative direction
                out[k] = (a[k] + frac * delta) % c
            return out
        return a + frac * (b - a)


def circle_model(circumference, mesh):
    return ManifoldModel("circle", mesh, circumferences=(float(circumference),))


def torus_model(c1, c2, mesh):
    return ManifoldModel("flat-torus", mesh,
                         circumferences=(float(c1), float(c2)))


def line_model(extent, mesh):
    return ManifoldModel("euclidean-line", mesh, extent=float(extent))


def plane_model(extent, mesh):
    return ManifoldModel("euclidean-plane", mesh, extent=float(extent))


def geodesic_point(model, x, p, s):
    """gamma_x(s) along the unit-speed geodesic from x toward p, clamped at p.

    Only Hadamard models (euclidean-line/plane) have the unique geodesics
    this relies on; compact models are rejected.
    """
    if not model.is_hadamard:
        raise ValueError("geodesic_point needs a Hadamard model "
                         "(circle/torus geodesics are non-unique at the cut locus)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if s < 0:
        raise ValueError("arclength must be nonnegative")
    dist = float(model.d(x, p)[0])
    if s >= dist - EPS or dist == 0.0:
        return p.copy()
    return x + (s / dist) * (p - x)


def check_cat0_convexity(model, trials, seed=0, tolerance=1e-9):
    """Max-convexity of distance between unit-speed geodesics.

    Samples endpoint quadruples and (theta, q, q'); asserts
    d(g1(theta q), g2(theta q')) <= max(d at 0, d at (q, q')) + tolerance.
    """
    if not model.is_hadamard:
        raise ValueError("convexity check needs a Hadamard model")
    rng = np.random.default_rng(seed)
    dim = model.dim
    E = model.extent if model.extent > 0 else 10.0
    A, B, C, D = (rng.uniform(-E, E, size=(trials, dim)) for _ in range(4))
    uab = B - A
    ucd = D - C
    lab = np.linalg.norm(uab, axis=1)
    lcd = np.linalg.norm(ucd, axis=1)
    ok = (lab > EPS) & (lcd > EPS)
    A, B, C, D, uab, ucd, lab, lcd = (z[ok] for z in (A, B, C, D, uab, ucd, lab, lcd))
    q = rng.uniform(0.05, 1.0, size=len(A)) * lab
    qp = rng.uniform(0.05, 1.0, size=len(A)) * lcd
    theta = rng.uniform(0.0, 1.0, size=len(A))
    g1 = A + (theta * q / lab)[:, None] * uab
    g2 = C + (theta * qp / lcd)[:, None] * ucd
    lhs = np.linalg.norm(g1 - g2, axis=1)
    end0 = np.linalg.norm(A - C, axis=1)
    end1 = np.linalg.norm((A + (q / lab)[:, None] * uab)
                          - (C + (qp / lcd)[:, None] * ucd), axis=1)
    rhs = np.maximum(end0, end1)
    margin = lhs - rhs
    worst = int(np.argmax(margin))
    verdict = "certified" if margin[worst] <= tolerance else "refuted"
    return Certification(verdict,
                         witness=None if verdict == "certified" else {
                             "g1_start": A[worst].tolist(),
                             "g2_start": C[worst].tolist(),
                             "violation": float(margin[worst])},
                         parameters={"trials": int(len(A)), "seed": seed,
                                     "tolerance": tolerance,
                                     "worst_margin": float(margin[worst])})


# ---------------------------------------------------------------------------
# p-cylinders


@dataclass
class HeightFunction:
    """Height p: base -> [-1, inf) driving a p-cylinder."""

    base: MetricSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.base.n,):
            raise ValueError("height must assign a value to every base point")
        if self.values.min() < -1 - EPS:
            raise ValueError("height values must be >= -1")

    @classmethod
    def constant(cls, base, value):
        return cls(base, np.full(base.n, float(value)))

    @classmethod
    def from_callable(cls, base, fn):
        return cls(base, np.array([fn(c) for c in base.coords]))


class PCylinder:
    """I_pX = {(x, t) : t <= p(x)+1} with the l2 metric, t on a grid.

    Columns are enumerated base-major with t ascending; each column ends at
    the largest grid level <= p(x)+1, which is where i1 lands.
    """

    def __init__(self, base, height, t_step):
        if t_step <= 0:
            raise ValueError("t_step must be positive")
        self.base = base
        self.height = height
        self.t_step = float(t_step)
        tops = np.floor((height.values + 1) / t_step + EPS).astype(int)
        if (tops < 0).any():
            raise ValueError("height below -1 leaves no room for a column")
        self.col_len = tops + 1
        self.col_start = np.concatenate(([0], np.cumsum(self.col_len)))[:-1]
        n = int(self.col_len.sum())
        self.point_base = np.repeat(np.arange(base.n), self.col_len)
        self.point_t = (np.arange(n) - self.col_start[self.point_base]) * t_step
        coords = np.hstack([base.coords[self.point_base],
                            self.point_t[:, None]])
        frontier = np.flatnonzero(np.isin(self.point_base,
                                          list(base.frontier)))
        self.space = MetricSpace(
            "cylinder", coords, basepoint=int(self.col_start[base.basepoint]),
            frontier=frontier,
            cylinder_base=(base, self.point_base, self.point_t),
            meta={"t_step": self.t_step})
        self.space.cylinder = self
        self.i0_ids = self.col_start.copy()
        self.i1_ids = self.col_start + self.col_len - 1

    @property
    def n(self):
        return self.space.n

    def id_at(self, base_id, t):
        k = int(round(t / self.t_step))
        if not (0 <= k < self.col_len[base_id]):
            raise KeyError(f"(x={base_id}, t={t}) outside the cylinder")
        return int(self.col_start[base_id] + k)

    def column(self, base_id):
        s = int(self.col_start[base_id])
        return np.arange(s, s + int(self.col_len[base_id]))

    def top_t(self, base_id):
        return float((self.col_len[base_id] - 1) * self.t_step)


def p_cylinder(base, p, t_step):
    """Build the p-cylinder over ``base`` with heights ``p`` on a t-grid."""
    return PCylinder(base, p, t_step)


def cone_interval(extent, step):
    """c([0,1]) = {(x,t): t <= x}: the p-cylinder over [0, extent] with p = x-1.

    i0(x) = (x, 0) and i1(x) = (x, x); the boundary is {t=0} u {t=x}.
    """
    from .metric import ray_grid
    base = ray_grid(extent, step)
    heights = HeightFunction(base, base.coords[:, 0] - 1.0)
    cyl = PCylinder(base, heights, step)
    cyl.boundary_ids = np.unique(np.concatenate([cyl.i0_ids, cyl.i1_ids]))
    return cyl


# ---------------------------------------------------------------------------
# metric cones


class ConeSpace:
    """Cone over a model: mesh(M) x {1, 1+dt, ..., t_max} as a geodesic graph."""

    def __init__(self, model, t_max, t_step):
        if t_max < 1:
            raise ValueError("t_max must be at least 1 (cones start at t=1)")
        if t_step <= 0 or model.mesh <= 0:
            raise ValueError("mesh and t_step must be positive")
        self.model = model
        self.t_max = float(t_max)
        self.t_step = float(t_step)
        self.levels = np.arange(1.0, t_max + t_step / 2, t_step)
        self.col_coords = model.mesh_coords()
        self.ncol = len(self.col_coords)
        self.nlev = len(self.levels)
        coords = np.hstack([np.repeat(self.col_coords, self.nlev, axis=0),
                            np.tile(self.levels, self.ncol)[:, None]])
        base_col = model.snap_index(np.zeros(model.dim))
        frontier = set(self.id_at(c, self.nlev - 1) for c in range(self.ncol))
        model_space = model.as_space()
        for c in model_space.frontier:
            frontier.update(self.id_at(c, k) for k in range(self.nlev))
        self.space = MetricSpace(
            "cone", coords, basepoint=self.id_at(base_col, 0),
            frontier=sorted(frontier), graph_factory=self._build_graph,
            meta={"model": model.kind, "mesh": model.mesh,
                  "t_max": self.t_max, "t_step": self.t_step})
        self.space.cone = self

    def id_at(self, col, lev):
        return int(col) * self.nlev + int(lev)

    def col_of(self, vid):
        return int(vid) // self.nlev

    def lev_of(self, vid):
        return int(vid) % self.nlev

    def level_value(self, vid):
        return float(self.levels[self.lev_of(vid)])

    def snap_point(self, model_coord, t):
        """Vertex id nearest to (model_coord, t)."""
        lev = int(round((t - 1.0) / self.t_step))
        lev = min(max(lev, 0), self.nlev - 1)
        return self.id_at(self.model.snap_index(model_coord), lev)

    def _build_graph(self):
        rows, cols, data = [], [], []
        nlev = self.nlev
        for col in range(self.ncol):
            s = col * nlev
            rows += list(range(s, s + nlev - 1))
            cols += list(range(s + 1, s + nlev))
            data += [self.t_step] * (nlev - 1)
        for i, j, w in self.model.mesh_edges():
            for k, t in enumerate(self.levels):
                rows.append(i * nlev + k)
                cols.append(j * nlev + k)
                data.append(float(t) * w)
        rows2 = rows + cols
        cols2 = cols + rows
        data2 = data + data
        n = self.ncol * nlev
        return sparse.csr_matrix((data2, (rows2, cols2)), shape=(n, n))


def metric_cone(model, t_max, t_step):
    return ConeSpace(model, t_max, t_step)


def check_cone_inequalities(cone, sample_count, tolerance, seed=0):
    """Check the three cone distance inequalities on sampled vertex pairs.

    (1) d <= |t-t'| + d_M(x,x') * min(t,t')   (horizontal-at-lower-level route;
        implies the same bound with t in place of min(t,t'))
    (2) |t-t'| <= d
    (3) d_M(x,x') <= d
    all within the relative tolerance.  Worst ratios and witnesses recorded.
    """
    rng = np.random.default_rng(seed)
    space = cone.space
    n = space.n
    n_sources = max(1, min(n, math.ceil(sample_count / max(n - 1, 1))))
    sources = np.sort(rng.choice(n, size=n_sources, replace=False))
    worst = {"upper": (0.0, None), "vertical": (0.0, None), "model": (0.0, None)}
    checked = 0
    for src in sources:
        d = space.distances_from(src)
        others = np.flatnonzero(np.arange(n) != src)
        t0 = cone.level_value(src)
        t1 = space.coords[others, -1]
        dM = cone.model.d(space.coords[src, :-1][None, :],
                          space.coords[others, :-1])
        dd = d[others]
        rhs = np.abs(t1 - t0) + dM * np.minimum(t0, t1)
        with np.errstate(invalid="ignore", divide="ignore"):
            r_upper = np.where(rhs > EPS, dd / rhs, 0.0)
            r_vert = np.where(dd > EPS, np.abs(t1 - t0) / dd, 0.0)
            r_model = np.where(dd > EPS, dM / dd, 0.0)
        for key, ratios in (("upper", r_upper), ("vertical", r_vert),
                            ("model", r_model)):
            k = int(np.argmax(ratios))
            if ratios[k] > worst[key][0]:
                worst[key] = (float(ratios[k]), (int(src), int(others[k])))
        checked += len(others)
    failed = {k: v for k, v in worst.items() if v[0] > 1.0 + tolerance}
    params = {"pairs_checked": checked, "tolerance": tolerance, "seed": seed,
              "worst_ratios": {k: v[0] for k, v in worst.items()},
              "witnesses": {k: v[1] for k, v in worst.items()}}
    if failed:
        key = next(iter(sorted(failed)))
        return Certification("refuted", witness={"inequality": key,
                                                 "pair": failed[key][1],
                                                 "ratio": failed[key][0]},
                             parameters=params)
    return Certification("certified", parameters=params)


def cone_descriptor(cone):
    return {"model": cone.model.kind, "mesh": cone.model.mesh,
            "circumferences": list(cone.model.circumferences),
            "extent": cone.model.extent,
            "t_max": cone.t_max, "t_step": cone.t_step}


def cone_from_descriptor(d):
    kind = d["model"]
    if kind == "circle":
        model = circle_model(d["circumferences"][0], d["mesh"])
    elif kind == "flat-torus":
        model = torus_model(*d["circumferences"], d["mesh"])
    elif kind == "euclidean-line":
        model = line_model(d["extent"], d["mesh"])
    else:
        model = plane_model(d["extent"], d["mesh"])
    return metric_cone(model, d["t_max"], d["t_step"])
