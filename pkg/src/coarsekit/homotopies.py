"""Explicit homotopies on cylinder grids.

Concatenation and reversal of loops, straight-line homotopies between close
maps, the slope-controlled reparametrization that turns a level-wise
Lipschitz bound into a global one, the contraction of a loop inside a cone
over a Hadamard model, the boundary-relative fix-up, and a pasting-lemma
checker.  Everything is grid-exact where the formulas allow it (integer
index arithmetic); where a formula leaves the grid, the rounding rule is
stated next to the rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import HeightFunction, PCylinder
from .lifting import Homotopy, LoopMap, RayMap
from .maps import Certification, CoarseMapData, Refuted, default_radii
from .metric import EPS


# ---------------------------------------------------------------------------
# loop algebra


def concatenate(alpha, beta):
    """The loop alpha * beta: run alpha at double speed, then beta.

    On the column over x the first half ``t <= x/2`` takes alpha(x, 2t) and
    the rest takes beta(x, 2t - x); both arguments stay on the t-grid because
    the grid is uniform, so no rounding actually happens (the nearest-down
    rule would only matter on a non-uniform grid).  The seam gap
    sup_x d(alpha(i1(x)), beta(i0(x))) is measured and recorded; a nonzero
    gap means the result cannot close into a loop and is refused.
    """
    if alpha.target is not beta.target:
        raise ValueError("cannot concatenate loops with different targets")
    cyl = alpha.cylinder
    other = beta.cylinder
    if cyl is not other and not (
            abs(cyl.t_step - other.t_step) <= EPS
            and np.array_equal(cyl.col_len, other.col_len)
            and np.allclose(cyl.base.coords, other.base.coords)):
        raise ValueError("cannot concatenate loops over different grids")
    if not np.array_equal(alpha.base.assignment, beta.base.assignment):
        seam = 0.0
        a, b = alpha.base.assignment, beta.base.assignment
        for src in np.unique(a):
            row = alpha.target.distances_from(int(src))
            seam = max(seam, float(row[b[a == src]].max()))
        raise ValueError(f"base rays differ (seam sup = {seam:.6g}); "
                         "the concatenation would not close into a loop")
    i = cyl.point_base                     # ray column index == base id
    k = np.rint(cyl.point_t / cyl.t_step).astype(np.int64)
    first = 2 * k <= i
    ia = cyl.col_start[i] + np.minimum(2 * k, i)
    ib = cyl.col_start[i] + np.clip(2 * k - i, 0, i)
    out = np.where(first, alpha.assignment[ia], beta.assignment[ib])
    return LoopMap(cyl, alpha.target, out, alpha.base, meta={"seam_sup": 0.0})


def reverse(alpha):
    """The reversed loop alpha*(x, t) = alpha(x, x - t); an exact involution."""
    cyl = alpha.cylinder
    i = cyl.point_base
    k = np.rint(cyl.point_t / cyl.t_step).astype(np.int64)
    out = alpha.assignment[cyl.col_start[i] + (i - k)]
    return LoopMap(cyl, alpha.target, out, alpha.base,
                   meta={"reversed": True})


# ---------------------------------------------------------------------------
# straight-line homotopies


def _interp_batch(model, A, B, frac):
    """Row-wise point a fraction ``frac`` along the minimizing geodesic.

    Same conventions as ManifoldModel.interpolate: compact models take the
    shorter wrap, exact antipodal ties go to the negative direction.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    frac = np.asarray(frac, dtype=float)[:, None]
    if model.kind in ("circle", "flat-torus"):
        out = np.empty_like(A)
        for ax, c in enumerate(model.circumferences):
            delta = (B[:, ax] - A[:, ax]) % c
            delta = np.where(delta > c / 2 + EPS, delta - c, delta)
            delta = np.where(np.abs(delta - c / 2) <= EPS, -c / 2, delta)
            out[:, ax] = (A[:, ax] + frac[:, 0] * delta) % c
        return out
    return A + frac * (B - A)


def _snap_cols(model, Y):
    """Vectorized nearest-mesh-column index for coordinate rows."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    axes = model._axes()
    idx = []
    for ax, axis in enumerate(axes):
        if model.kind in ("circle", "flat-torus"):
            c = model.circumferences[ax]
            i = np.rint((Y[:, ax] % c) / model.mesh).astype(np.int64) % len(axis)
        else:
            i = np.rint((Y[:, ax] - axis[0]) / model.mesh).astype(np.int64)
            i = np.clip(i, 0, len(axis) - 1)
        idx.append(i)
    if len(axes) == 1:
        return idx[0]
    return idx[0] * len(axes[1]) + idx[1]


def straight_line_homotopy(f, g, geometry=None, t_step=1.0):
    """Interpolate between two close maps at unit speed, clamped at arrival.

    Parameters
    ----------
    f, g : CoarseMapData
        Maps with the same source and the same geometric target.
    geometry : ManifoldModel or ConeSpace backing the common target.  May be
        omitted when the target space knows its cone builder.
    t_step : grid step of the interpolation parameter.

    Returns
    -------
    Homotopy over the cylinder with constant height closeness(f, g): H(x, 0)
    = f(x), and H(x, s) = g(x) for every s past the pointwise distance.  On
    cone targets the horizontal motion follows the model geodesic at the
    (linearly interpolated) level; on lattice targets it follows the model
    geodesic itself.
    """
    if f.source is not g.source or f.target is not g.target:
        raise ValueError("straight-line homotopy needs maps with "
                         "identical source and target")
    if geometry is None:
        geometry = getattr(f.target, "cone", None)
    if geometry is None:
        raise ValueError("no interpolation available on this target; "
                         "pass the backing model or cone")
    cone = geometry if hasattr(geometry, "levels") else None
    model = cone.model if cone is not None else geometry
    n = f.source.n

    if cone is not None:
        if f.target is not cone.space:
            raise ValueError("geometry does not back the target space")
        fc, gc = f.assignment // cone.nlev, g.assignment // cone.nlev
        tf = cone.levels[f.assignment % cone.nlev]
        tg = cone.levels[g.assignment % cone.nlev]
        Yf, Yg = cone.col_coords[fc], cone.col_coords[gc]
        cx = np.empty(n)
        for src in np.unique(f.assignment):
            sel = f.assignment == src
            row = f.target.distances_from(int(src))
            cx[sel] = row[g.assignment[sel]]
    else:
        if f.target.n != len(model.mesh_coords()):
            raise ValueError("geometry does not back the target space")
        Yf = f.target.coords[f.assignment]
        Yg = f.target.coords[g.assignment]
        cx = model.d(Yf, Yg)
        tf = tg = None

    c = float(cx.max()) if n else 0.0
    cyl = PCylinder(f.source, HeightFunction.constant(f.source, c), t_step)
    b = cyl.point_base
    s = cyl.point_t
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(cx[b] > EPS, np.minimum(s / np.maximum(cx[b], EPS), 1.0),
                       1.0)
    Z = _interp_batch(model, Yf[b], Yg[b], lam)
    Z[lam >= 1.0 - EPS] = Yg[b][lam >= 1.0 - EPS]
    cols = _snap_cols(model, Z)
    if cone is not None:
        lev_val = tf[b] + lam * (tg[b] - tf[b])
        lev = np.clip(np.rint((lev_val - 1.0) / cone.t_step).astype(np.int64),
                      0, cone.nlev - 1)
        out = cols * cone.nlev + lev
    else:
        out = cols
    return Homotopy(cyl, f.target, out, meta={"closeness": c,
                                              "straight_line": True})


# ---------------------------------------------------------------------------
# Lipschitz scan (shared by the reparametrization and pasting checks)


def lipschitz_scan(f, sample_count=4096, seed=0, within=None):
    """Worst d_target/d_source ratio over sampled distinct pairs.

    Returns (sup_ratio, witness_pair).  ``within`` restricts both endpoints
    to the given source ids.
    """
    rng = np.random.default_rng(seed)
    ids = np.arange(f.source.n) if within is None else np.asarray(within)
    if len(ids) < 2:
        return 0.0, None
    n_src = max(1, min(len(ids), math.ceil(sample_count / max(len(ids) - 1, 1))))
    sources = rng.choice(ids, size=n_src, replace=False)
    worst, witness = 0.0, None
    for src in sources:
        ds = f.source.distances_from(int(src))[ids]
        dt = f.target.distances_from(int(f.assignment[src]))[f.assignment[ids]]
        ok = ds > EPS
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.where(ok, dt / np.maximum(ds, EPS), 0.0)
        k = int(np.argmax(ratios))
        if ratios[k] > worst:
            worst, witness = float(ratios[k]), (int(src), int(ids[k]))
    return worst, witness


# ---------------------------------------------------------------------------
# reparametrization


@dataclass
class LevelLipschitzProfile:
    """Level-indexed Lipschitz table K -> L_K, integer, >= 1, nondecreasing."""

    table: dict

    def __post_init__(self):
        keys = sorted(self.table)
        if not keys or keys[0] != 1 or keys != list(range(1, len(keys) + 1)):
            raise ValueError("profile needs contiguous integer levels 1..K")
        vals = [self.table[k] for k in keys]
        if any(int(v) != v or v < 1 for v in vals):
            raise ValueError("profile constants must be integers >= 1")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("profile constants must be nondecreasing")
        self.table = {int(k): int(self.table[k]) for k in keys}

    @classmethod
    def from_values(cls, values):
        return cls({k + 1: v for k, v in enumerate(values)})

    @property
    def kmax(self):
        return max(self.table)

    def at(self, K):
        K = int(math.ceil(K))
        if K < 1:
            K = 1
        if K > self.kmax:
            raise KeyError(f"profile has no constant for level {K}")
        return self.table[K]


@dataclass
class Reparametrization:
    """Piecewise-affine monotone rho on the ray, with the induced square map
    g(x, t) = (rho(x), t rho(x)/x) on c([0,1]) (and g(0,0) = (0,0))."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __post_init__(self):
        self.knots_x = np.asarray(self.knots_x, dtype=float)
        self.knots_y = np.asarray(self.knots_y, dtype=float)
        if self.knots_x.shape != self.knots_y.shape or self.knots_x.ndim != 1:
            raise ValueError("knot arrays must be matching 1-d arrays")
        if (np.diff(self.knots_x) <= 0).any() or (np.diff(self.knots_y) < 0).any():
            raise ValueError("rho must be monotone (strict in x)")
        if (self.knots_y > self.knots_x + EPS).any():
            raise ValueError("rho must satisfy rho(x) <= x to stay in c([0,1])")

    def rho(self, x):
        return np.interp(x, self.knots_x, self.knots_y)

    def apply(self, x, t):
        if x <= 0:
            return 0.0, 0.0
        r = float(self.rho(x))
        return r, t * r / x

    def segments(self):
        """Rows (x0, x1, slope) of the affine pieces."""
        dx = np.diff(self.knots_x)
        dy = np.diff(self.knots_y)
        return [(float(a), float(b), float(s))
                for a, b, s in zip(self.knots_x[:-1], self.knots_x[1:], dy / dx)]

    def as_grid_map(self, cyl):
        """g as a map of the c([0,1]) grid onto itself (nearest, half up)."""
        step = cyl.t_step
        i = cyl.point_base
        x = i * step
        t = cyl.point_t
        r = self.rho(x)
        j = np.clip(np.floor(r / step + 0.5).astype(np.int64), 0, cyl.base.n - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            tprime = np.where(x > 0, t * r / np.maximum(x, EPS), 0.0)
        k = np.clip(np.floor(tprime / step + 0.5).astype(np.int64), 0, j)
        return CoarseMapData(cyl.space, cyl.space, cyl.col_start[j] + k)


def reparametrize_to_lipschitz(profile):
    """Slow the ray down so level-wise Lipschitz control becomes global.

    Builds rho linear from [0, 2 L_2] onto [0, 1], then affine from
    [n, n + L_{k+2} (k+2)] onto [k, k+1] for k = 1, 2, ...  On the segment
    with image [k, k+1] any map honoring the profile is L_{k+1}-Lipschitz,
    so the composite contracts by L_{k+1} / (L_{k+2} (k+2)) <= 1/(k+2) < 1.

    Returns (Reparametrization, Certification); the certificate carries the
    per-segment slope/constant products that witness the 1-Lipschitz claim.
    """
    kx, ky = [0.0], [0.0]
    k = 0
    while k + 2 <= profile.kmax:
        kx.append(kx[-1] + profile.at(k + 2) * (k + 2))
        ky.append(float(k + 1))
        k += 1
    if len(kx) == 1:
        raise ValueError("profile needs constants up to level 2 at least")
    rep = Reparametrization(np.array(kx), np.array(ky))
    rows = []
    worst = 0.0
    for seg, (x0, x1, slope) in enumerate(rep.segments()):
        cap = profile.at(seg + 1)
        product = cap * slope
        worst = max(worst, product)
        rows.append({"from": x0, "to": x1, "slope": slope,
                     "lipschitz_cap": cap, "product": product})
    verdict = "certified" if worst <= 1.0 + EPS else "refuted"
    notes = ("each segment maps into levels <= k+1, where a profile-honoring "
             "map is L_{k+1}-Lipschitz; slope 1/(L_{k+2}(k+2)) makes the "
             "composite factor at most 1/(k+2)",)
    return rep, Certification(verdict, witness=None,
                              parameters={"segments": rows,
                                          "worst_product": worst},
                              notes=notes)


# ---------------------------------------------------------------------------
# contraction of a loop inside a cone over a Hadamard model


def contraction_homotopy(alpha, p, s_step=None, sample_count=1000,
                         tolerance=0.15, seed=0):
    """Contract a loop in a cone over a Hadamard model to the column over p.

    The loop is first slowed down through the square reparametrization
    alpha'(x, t) = alpha(x/max(1, sqrt x), t/max(1, sqrt x)) (the stage map
    H1((x,t), s) = (x - s, t (x - s)/x) is built alongside and stored in the
    result's meta).  Writing alpha'(x,t) = (y, u) and q = d(y, p) u - 1, the
    homotopy over the q-cylinder moves y toward p along the model geodesic
    at constant level:

        H'((x,t), s) = (gamma_y(s/u), u)

    clamped at arrival, so the terminal edge sits exactly on the column over
    p.  Column heights are rounded up to the next grid level so the clamp
    completes on the grid.  The numeric increments the construction relies
    on are then measured on sampled unit-separated cylinder pairs and the
    run is refused if any of them exceeds its budget (q-increment <= 8,
    level-times-model term <= 4, mixed term <= 4 + 2/sqrt(x), vertical
    term <= |s - s'|) beyond the declared tolerance.

    Returns (Homotopy, LoopMap): the contraction and the constant-in-t
    terminal loop beta(x, t) = H'((x, 0), top).
    """
    cone = getattr(alpha.target, "cone", None)
    if cone is None:
        raise ValueError("alpha must map into a metric cone")
    model = cone.model
    if not model.is_hadamard:
        raise ValueError("contraction needs a Hadamard model "
                         "(unique geodesics toward p)")
    cyl = alpha.cylinder
    step = cyl.t_step
    if s_step is None:
        s_step = step
    base = cyl.space
    p_col = model.snap_index(np.asarray(p, dtype=float))
    p_coord = cone.col_coords[p_col]

    # adjust alpha at the cone point: alpha(0, 0) = (p, 1)
    a = alpha.assignment.copy()
    a[cyl.col_start[0]] = cone.id_at(p_col, 0)

    # alpha' on the c-grid: evaluate alpha at the shrunk argument
    x = base.coords[:, 0]
    t = base.coords[:, 1]
    m = np.maximum(1.0, np.sqrt(np.maximum(x, 0.0)))
    j = np.clip(np.floor(x / m / step + 0.5).astype(np.int64), 0, cyl.base.n - 1)
    k = np.clip(np.floor(t / m / step + 0.5).astype(np.int64), 0, j)
    aprime = a[cyl.col_start[j] + k]
    ycols = aprime // cone.nlev
    y = cone.col_coords[ycols]
    u = cone.levels[aprime % cone.nlev]
    dyp = model.d(y, p_coord[None, :])
    q = dyp * u - 1.0

    # heights: q rounded up to the grid so the top step reaches p exactly
    qeff = s_step * np.ceil((q + 1.0) / s_step - EPS) - 1.0
    icyl = PCylinder(base, HeightFunction(base, qeff), s_step)

    b = icyl.point_base
    s = icyl.point_t
    dd = dyp[b]
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(dd > EPS,
                       np.minimum(s / u[b] / np.maximum(dd, EPS), 1.0), 1.0)
    Z = y[b] + lam[:, None] * (p_coord[None, :] - y[b])
    Z[lam >= 1.0 - EPS] = p_coord
    zcols = _snap_cols(model, Z)
    lev = np.rint((u[b] - 1.0) / cone.t_step).astype(np.int64)
    assign = zcols * cone.nlev + lev

    # the H1 normalization stage, kept alongside for inspection; below x = 1
    # the slide range s <= x - max(1, sqrt x) is empty, so those columns are
    # single points
    h1cyl = PCylinder(base, HeightFunction(base, np.maximum(x - m, 0.0) - 1.0),
                      step)
    b1 = h1cyl.point_base
    s1 = h1cyl.point_t
    x1 = x[b1] - s1
    j1 = np.rint(x1 / step).astype(np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        t1 = np.where(x[b1] > 0, t[b1] * x1 / np.maximum(x[b1], EPS), 0.0)
    k1 = np.clip(np.floor(t1 / step + 0.5).astype(np.int64), 0,
                 np.maximum(j1, 0))
    h1 = Homotopy(h1cyl, base, cyl.col_start[j1] + k1,
                  meta={"stage": "square-reparametrization"})

    H = Homotopy(icyl, cone.space, assign,
                 meta={"contraction": True, "h1": h1, "p": p_coord.tolist(),
                       "base_x": x, "base_y": y, "base_u": u, "base_q": q,
                       "alpha_prime": aprime})
    report = contraction_bound_report(H, sample_count=sample_count,
                                      tolerance=tolerance, seed=seed)
    H.meta["bounds"] = report
    if not report.certified:
        raise Refuted("contraction increments exceed the proof budget",
                      witness=report.witness, details=report.parameters)

    top = assign[icyl.i1_ids]               # one value per c-point
    if not np.all(top // cone.nlev == p_col):
        raise AssertionError("terminal edge left the column over p")
    v = top[cyl.i0_ids]                     # beta'(x, 0) per ray column
    base_ray = RayMap(cone.space, v, step, meta={"contraction_terminal": True})
    beta = LoopMap(cyl, cone.space, v[cyl.point_base], base_ray,
                   meta={"constant_in_t": True})
    return H, beta


def contraction_bound_report(H, sample_count=1000, tolerance=0.15, seed=0):
    """Measure the contraction increments on sampled unit-separated pairs.

    Pairs ((x,t),s), ((x',t'),s') of cylinder points at l2-distance <= 1
    with x, x' > 1 are sampled uniformly; for each, four ratios against the
    construction's budgets are recorded:

      q_increment    |q - q'| / 8
      level_model    max(u,u') d_M(y, y') / 4
      mixed          (u |gamma_y'(s0/u) - gamma_y'(s0/u')| + |u - u'|)
                     / (4 + 2/sqrt(max(x, x')))      with s0 = min(s, s')
      vertical       u d_M(z, z') / |s - s'|         on same-column pairs,
                     z the stored (snapped) geodesic positions

    Returns a Certification with worst ratios and witnesses; refuted when
    any worst ratio exceeds 1 + tolerance.
    """
    cone = H.target.cone
    model = cone.model
    icyl = H.cylinder
    base = icyl.base
    x = H.meta["base_x"]
    y = H.meta["base_y"]
    u = H.meta["base_u"]
    q = H.meta["base_q"]
    p_coord = np.asarray(H.meta["p"], dtype=float)
    dyp = model.d(y, p_coord[None, :])

    ccyl = base.cylinder                    # the c([0,1]) grid structure
    step = ccyl.t_step
    s_step = icyl.t_step
    i_pt = ccyl.point_base[icyl.point_base]
    k_pt = np.rint(ccyl.point_t[icyl.point_base] / step).astype(np.int64)
    j_pt = np.rint(icyl.point_t / s_step).astype(np.int64)

    imax, jmax = int(i_pt.max()), int(j_pt.max())
    lut = np.full((imax + 1, imax + 1, jmax + 1), -1, dtype=np.int64)
    lut[i_pt, k_pt, j_pt] = np.arange(icyl.n)

    offs = []
    ra, rc = int(1.0 / step), int(1.0 / s_step)
    for da in range(-ra, ra + 1):
        for db in range(-ra, ra + 1):
            for dc in range(-rc, rc + 1):
                if (da, db, dc) == (0, 0, 0):
                    continue
                if (da * step) ** 2 + (db * step) ** 2 + (dc * s_step) ** 2 \
                        <= 1.0 + EPS:
                    offs.append((da, db, dc))
    offs = np.array(offs)

    rng = np.random.default_rng(seed)
    got_i, got_j = [], []
    have = 0
    for _ in range(60):
        if have >= sample_count:
            break
        batch = 4 * (sample_count - have)
        pi = rng.integers(0, icyl.n, size=batch)
        po = offs[rng.integers(0, len(offs), size=batch)]
        ii = i_pt[pi] + po[:, 0]
        kk = k_pt[pi] + po[:, 1]
        jj = j_pt[pi] + po[:, 2]
        ok = ((ii >= 0) & (ii <= imax) & (kk >= 0) & (kk <= imax)
              & (jj >= 0) & (jj <= jmax))
        mate = np.full(batch, -1, dtype=np.int64)
        mate[ok] = lut[ii[ok], kk[ok], jj[ok]]
        ok &= mate >= 0
        ok &= (i_pt[pi] * step > 1.0 + EPS)
        ok &= np.where(ok, i_pt[np.where(ok, mate, 0)] * step > 1.0 + EPS,
                       False)
        got_i.append(pi[ok])
        got_j.append(mate[ok])
        have += int(ok.sum())
    if have == 0:
        raise ValueError("no unit-separated pairs with x > 1 to sample")
    A = np.concatenate(got_i)[:sample_count]
    B = np.concatenate(got_j)[:sample_count]
    ba, bb = icyl.point_base[A], icyl.point_base[B]
    sa, sb = icyl.point_t[A], icyl.point_t[B]

    ratios = {}
    witnesses = {}

    def record(name, vals, sel_a, sel_b):
        if len(vals) == 0:
            ratios[name] = 0.0
            witnesses[name] = None
            return
        k = int(np.argmax(vals))
        ratios[name] = float(vals[k])
        witnesses[name] = {"pair": [_coords(sel_a[k]), _coords(sel_b[k])],
                           "ratio": float(vals[k])}

    def _coords(pt):
        bid = icyl.point_base[pt]
        return [float(x[bid]), float(base.coords[bid, 1]),
                float(icyl.point_t[pt])]

    r1 = np.abs(q[ba] - q[bb]) / 8.0
    record("q_increment", r1, A, B)

    r2 = np.maximum(u[ba], u[bb]) * model.d(y[ba], y[bb]) / 4.0
    record("level_model", r2, A, B)

    s0 = np.minimum(sa, sb)
    arc1 = np.minimum(s0 / u[ba], dyp[bb])
    arc2 = np.minimum(s0 / u[bb], dyp[bb])
    lhs = u[ba] * np.abs(arc1 - arc2) + np.abs(u[ba] - u[bb])
    rhs = 4.0 + 2.0 / np.sqrt(np.maximum(x[ba], x[bb]))
    record("mixed", lhs / rhs, A, B)

    same = (ba == bb) & (np.abs(sa - sb) > EPS)
    za = cone.col_coords[H.assignment[A[same]] // cone.nlev]
    zb = cone.col_coords[H.assignment[B[same]] // cone.nlev]
    dv = u[ba[same]] * model.d(za, zb) / np.abs(sa[same] - sb[same])
    record("vertical", dv, A[same], B[same])

    worst_name = max(ratios, key=lambda nm: ratios[nm])
    params = {"pairs": int(len(A)), "tolerance": tolerance, "seed": seed,
              "worst_ratios": ratios, "witnesses": witnesses,
              "vertical_pairs": int(same.sum()),
              "worst": ratios[worst_name]}
    if ratios[worst_name] > 1.0 + tolerance:
        return Certification("refuted",
                             witness={"bound": worst_name,
                                      **(witnesses[worst_name] or {})},
                             parameters=params)
    return Certification("certified", witness=None, parameters=params)


# ---------------------------------------------------------------------------
# boundary fix


def stretch_to_unit_slope(H):
    """Re-grid a homotopy over c([0,1]) to column heights p(x, t) = x - 1.

    Each column's parameter is rescaled affinely onto [0, x] (nearest index,
    half up), which changes speed but not the track; this is the usual
    normalization before the boundary fix.
    """
    ccyl = H.cylinder.base.cylinder
    xvals = H.cylinder.base.coords[:, 0]
    out_cyl = PCylinder(H.cylinder.base,
                        HeightFunction(H.cylinder.base, xvals - 1.0),
                        ccyl.t_step)
    b = out_cyl.point_base
    new_top = (out_cyl.col_len - 1)[b]
    old_top = (H.cylinder.col_len - 1)[b]
    jnew = np.rint(out_cyl.point_t / out_cyl.t_step).astype(np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(new_top > 0, jnew / np.maximum(new_top, 1), 1.0)
    jold = np.floor(frac * old_top + 0.5).astype(np.int64)
    out = H.assignment[H.cylinder.col_start[b] + np.minimum(jold, old_top)]
    return Homotopy(out_cyl, H.target, out,
                    meta={**H.meta, "unit_slope": True})


def boundary_fix(H):
    """Make a loop homotopy relative to the boundary by folding in its track.

    Requires column heights p(x, t) = x - 1 and the matching condition
    H((x,0), s) = H((x,x), s) for all s (refused with a witness otherwise).
    The output on the same cylinder is

        b(x)                     t <= x/4 - s/4
        H((x,0), 4t - x + s)     up to t <= x/4
        H((x, 2t - x/2), s)      up to t <= 3x/4
        H((x,0), 3x - 4t + s)    up to t <= 3x/4 + s/4
        b(x)                     otherwise

    with b(x) = H((x,0), 0); branch tests run in this order with <=, so
    seams land in the earlier branch, and the half-integer index in the
    middle branch rounds down.  The result is exactly constant in s along
    both boundary edges (asserted).
    """
    icyl = H.cylinder
    base = icyl.base
    ccyl = getattr(base, "cylinder", None)
    if ccyl is None:
        raise ValueError("boundary fix expects a homotopy over c([0,1])")
    step = ccyl.t_step
    if abs(icyl.t_step - step) > EPS:
        raise ValueError("boundary fix expects the homotopy grid to match "
                         "the loop grid")
    i = ccyl.point_base[icyl.point_base]
    # heights must be p(x,t) = x-1: the column over (x,t) has x/step + 1 points
    expected = ccyl.point_base + 1
    if not np.array_equal(icyl.col_len, expected):
        bad = int(np.flatnonzero(icyl.col_len != expected)[0])
        raise ValueError(f"boundary fix expects unit-slope heights "
                         f"(p = x - 1); column {bad} disagrees")

    # matching condition: the columns over (x, 0) and (x, x) must agree
    for col in range(ccyl.base.n):
        c0 = int(ccyl.i0_ids[col])
        c1 = int(ccyl.i1_ids[col])
        v0 = H.assignment[icyl.column(c0)]
        v1 = H.assignment[icyl.column(c1)]
        if not np.array_equal(v0, v1):
            s_bad = float(np.flatnonzero(v0 != v1)[0] * step)
            raise Refuted("matching condition H((x,0),s) = H((x,x),s) fails",
                          witness={"x": float(col * step), "s": s_bad})

    k = np.rint(ccyl.point_t[icyl.point_base] / step).astype(np.int64)
    j = np.rint(icyl.point_t / step).astype(np.int64)
    cs = icyl.col_start
    c0 = ccyl.col_start[i]                  # id of the c-point (x, 0)

    m1 = 4 * k <= i - j
    m2 = 4 * k <= i
    m3 = 4 * k <= 3 * i
    m4 = 4 * k <= 3 * i + j

    b_val = H.assignment[cs[c0]]
    v2 = H.assignment[cs[c0] + np.clip(4 * k - i + j, 0, i)]
    kmid = np.clip((4 * k - i) // 2, 0, i)
    v3 = H.assignment[cs[ccyl.col_start[i] + kmid] + j]
    v4 = H.assignment[cs[c0] + np.clip(3 * i - 4 * k + j, 0, i)]
    out = np.select([m1, m2, m3, m4], [b_val, v2, v3, v4], default=b_val)

    fixed = Homotopy(icyl, H.target, out, meta={"boundary_fix": True})
    for col in range(ccyl.base.n):
        for edge in (ccyl.i0_ids[col], ccyl.i1_ids[col]):
            column = fixed.assignment[icyl.column(int(edge))]
            if not np.all(column == column[0]):
                raise AssertionError("boundary edge is not constant in s")
    return fixed


def boundary_fix_report(H, fixed):
    """Audit a boundary fix: relative exactness and branch-seam agreement.

    For each of the four seams (4t = x - s, 4t = x, 4t = 3x, 4t = 3x + s)
    every grid sample lying exactly on the seam is evaluated through both
    adjacent branch formulas; the seam is exact when the values coincide.
    The relative part re-checks that the fixed homotopy is constant in s
    along both boundary edges and that the constant is b(x) = H((x,0),0).
    """
    icyl = fixed.cylinder
    ccyl = icyl.base.cylinder
    step = ccyl.t_step
    i = ccyl.point_base[icyl.point_base]
    k = np.rint(ccyl.point_t[icyl.point_base] / step).astype(np.int64)
    j = np.rint(icyl.point_t / step).astype(np.int64)
    cs = icyl.col_start
    c0 = ccyl.col_start[i]

    b_val = H.assignment[cs[c0]]
    v2 = H.assignment[cs[c0] + np.clip(4 * k - i + j, 0, i)]
    kmid = np.clip((4 * k - i) // 2, 0, i)
    v3 = H.assignment[cs[ccyl.col_start[i] + kmid] + j]
    v4 = H.assignment[cs[c0] + np.clip(3 * i - 4 * k + j, 0, i)]
    branch_vals = (b_val, v2, v3, v4, b_val)

    seams = (("4t = x - s", 4 * k == i - j, 0, 1),
             ("4t = x", 4 * k == i, 1, 2),
             ("4t = 3x", 4 * k == 3 * i, 2, 3),
             ("4t = 3x + s", 4 * k == 3 * i + j, 3, 4))
    seam_rows = []
    for name, mask, a, b in seams:
        agree = bool((branch_vals[a][mask] == branch_vals[b][mask]).all())
        seam_rows.append({"seam": name, "samples": int(mask.sum()),
                          "exact": agree})

    edge_const = True
    edge_is_b = True
    for col in range(ccyl.base.n):
        for edge in (int(ccyl.i0_ids[col]), int(ccyl.i1_ids[col])):
            column = fixed.assignment[icyl.column(edge)]
            edge_const &= bool((column == column[0]).all())
            x_col = ccyl.point_base[edge]
            b_col = H.assignment[cs[ccyl.col_start[x_col]]]
            edge_is_b &= bool((column == b_col).all())
    return {"seams": seam_rows,
            "seams_exact": all(r["exact"] for r in seam_rows),
            "boundary_constant_in_s": edge_const,
            "boundary_value_is_b": edge_is_b}


# ---------------------------------------------------------------------------
# pasting


def check_pasting(f, pieces, lipschitz=False, radii=None, sample_count=2048,
                  tolerance=0.05, seed=0):
    """Certify that control on closed pieces gives control globally.

    ``pieces`` is a finite closed cover of the source by id arrays.  The
    coarse variant scans a control profile on each piece and checks the
    global profile against chaining: rho(r) <= ceil(r) * max_i rho_i(1).
    The Lipschitz variant (lipschitz=True) checks that the global worst
    ratio is at most the worst per-piece ratio, within tolerance.
    """
    base = f.source
    pieces = [np.asarray(p, dtype=np.int64) for p in pieces]
    covered = np.unique(np.concatenate(pieces)) if pieces else np.array([])
    if len(covered) != base.n or covered[0] != 0 or covered[-1] != base.n - 1:
        missing = np.setdiff1d(np.arange(base.n), covered)
        raise ValueError(f"cover incomplete: point {int(missing[0])} "
                         "is in no piece")

    rng = np.random.default_rng(seed)

    if lipschitz:
        piece_consts = []
        for p in pieces:
            worst, _ = lipschitz_scan(f, sample_count=sample_count,
                                      seed=int(rng.integers(2 ** 31)),
                                      within=p)
            piece_consts.append(worst)
        global_const, witness = lipschitz_scan(
            f, sample_count=sample_count, seed=int(rng.integers(2 ** 31)))
        bound = max(piece_consts) * (1.0 + tolerance)
        params = {"piece_constants": piece_consts,
                  "global_constant": global_const, "tolerance": tolerance}
        if global_const > bound + EPS:
            return Certification("refuted",
                                 witness={"pair": witness,
                                          "ratio": global_const,
                                          "bound": bound},
                                 parameters=params)
        return Certification("certified", witness=None, parameters=params)

    if radii is None:
        radii = default_radii(base)
    radii = sorted(set(float(r) for r in radii) | {1.0})

    def profile_rows(ids):
        ids = np.asarray(ids)
        n_src = max(1, min(len(ids),
                           math.ceil(sample_count / max(len(ids) - 1, 1))))
        sources = rng.choice(ids, size=n_src, replace=False)
        sup = {r: 0.0 for r in radii}
        for src in sources:
            ds = base.distances_from(int(src))[ids]
            dt = f.target.distances_from(int(f.assignment[src]))[
                f.assignment[ids]]
            for r in radii:
                sel = ds <= r + EPS
                if sel.any():
                    sup[r] = max(sup[r], float(dt[sel].max()))
        return sup

    piece_profiles = [profile_rows(p) for p in pieces]
    global_profile = profile_rows(np.arange(base.n))
    m1 = max(pp[1.0] for pp in piece_profiles)
    rows = []
    bad = None
    for r in radii:
        bound = math.ceil(r) * m1 * (1.0 + tolerance)
        rows.append({"radius": r, "global": global_profile[r],
                     "chain_bound": bound})
        if global_profile[r] > bound + EPS and bad is None:
            bad = {"radius": r, "global": global_profile[r], "bound": bound}
    params = {"piece_profiles": [{str(r): v for r, v in pp.items()}
                                 for pp in piece_profiles],
              "rows": rows, "max_piece_at_1": m1, "tolerance": tolerance}
    if bad is not None:
        return Certification("refuted", witness=bad, parameters=params)
    return Certification("certified", witness=None, parameters=params)
