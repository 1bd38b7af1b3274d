"""Stored maps between finite spaces, control profiles, coarseness trends.

On a finite model "the preimage of every bounded set is bounded" is vacuous,
so coarseness is certified as a trend: preimage radii are scanned over a grid
of truncation radii and a map is refuted only when some bounded target ball
keeps pulling back to the source's truncation shell at every scale.  Every
certification carries the note that this is finite-model trend semantics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import EPS, MetricSpace, ball

TREND_NOTE = ("finite-model trend semantics: boundedness statements are "
              "certified as trends over truncation radii, not proved")

PAIR_BUDGET = 10 ** 7


class Refuted(Exception):
    """A certification failed; carries a checkable witness."""

    def __init__(self, message, witness=None, details=None):
        super().__init__(message)
        self.witness = witness
        self.details = details or {}


@dataclass
class Certification:
    verdict: str                      # "certified" | "refuted" | "inconclusive"
    witness: object = None
    parameters: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def certified(self):
        return self.verdict == "certified"


@dataclass
class ControlProfile:
    """Sampled control function: bounds[i] dominates pairs within radii[i]."""

    radii: np.ndarray
    bounds: np.ndarray
    exhaustive: bool = True
    sampled_sources: int | None = None

    def at(self, r):
        """Bound valid for pairs within distance r (smallest sampled radius >= r)."""
        idx = int(np.searchsorted(self.radii, r - EPS))
        if idx >= len(self.radii):
            raise ValueError(f"profile not sampled out to radius {r}")
        return float(self.bounds[idx])

    def rows(self):
        return [(float(r), float(b)) for r, b in zip(self.radii, self.bounds)]


@dataclass
class CoarseMapData:
    """A total map between spaces, stored as an assignment array."""

    source: MetricSpace
    target: MetricSpace
    assignment: np.ndarray
    profile: ControlProfile | None = None

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=int)
        if self.assignment.shape != (self.source.n,):
            raise ValueError("assignment must cover every source point")
        if self.assignment.min() < 0 or self.assignment.max() >= self.target.n:
            raise ValueError("assignment hits unknown target ids")

    def __call__(self, point):
        return int(self.assignment[point])

    def image_ids(self):
        return np.unique(self.assignment)


def fibres_of(f):
    """Preimage ids per target value, as {target_id: sorted source ids}."""
    order = np.argsort(f.assignment, kind="stable")
    sorted_vals = f.assignment[order]
    cuts = np.flatnonzero(np.diff(sorted_vals)) + 1
    return {int(f.assignment[g[0]]): g for g in np.split(order, cuts)}


def identity_map(space):
    return CoarseMapData(space, space, np.arange(space.n))


def constant_map(source, target, value):
    return CoarseMapData(source, target, np.full(source.n, int(value)))


def compose(f, g):
    """f o g (apply g first).  Requires g.target is f.source."""
    if g.target is not f.source:
        raise ValueError("composition type mismatch: g.target != f.source")
    return CoarseMapData(g.source, f.target, f.assignment[g.assignment])


def default_radii(space):
    """Powers of 2 from 1 up to (just past) the basepoint eccentricity."""
    top = max(space.eccentricity(), 1.0)
    radii = [1.0]
    while radii[-1] < top:
        radii.append(radii[-1] * 2)
    return radii


def control_profile(f, radii, budget=PAIR_BUDGET, seed=0):
    """Empirical control function of ``f`` sampled at the given radii.

    bounds[i] = max target distance over source pairs within radii[i];
    exhaustive below the pair budget, uniform source subsample above it.
    """
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii.size == 0:
        raise ValueError("radii must be nonempty")
    if radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing and positive")
    n = f.source.n
    exhaustive = n * n <= budget
    if exhaustive:
        sources = np.arange(n)
    else:
        rng = np.random.default_rng(seed)
        m = max(budget // n, 1)
        sources = np.sort(rng.choice(n, size=min(m, n), replace=False))
    bounds = np.zeros_like(radii)
    for i in sources:
        ds = f.source.distances_from(i)
        dt = f.target.distances_from(f.assignment[i])[f.assignment]
        order = np.argsort(ds, kind="stable")
        running = np.maximum.accumulate(dt[order])
        # last pair index within each radius
        pos = np.searchsorted(ds[order], radii + EPS, side="right") - 1
        ok = pos >= 0
        np.maximum(bounds, np.where(ok, running[np.clip(pos, 0, None)], 0.0),
                   out=bounds)
    bounds = np.maximum.accumulate(bounds)
    return ControlProfile(radii, bounds, exhaustive=exhaustive,
                          sampled_sources=None if exhaustive else len(sources))


def certify_coarse(f, truncation_radii=None):
    """Trend certification of preimage boundedness.

    For each truncation radius r the ball around the target basepoint is
    pulled back; the preimage's radius around the source basepoint and
    whether it touches the source frontier are recorded.  Refuted only if the
    preimage touches the truncation shell at every scanned radius.
    """
    if truncation_radii is None:
        truncation_radii = default_radii(f.target)
    truncation_radii = sorted(float(r) for r in truncation_radii)
    if not truncation_radii:
        raise ValueError("truncation_radii must be nonempty")
    d_tgt = f.target.distances_from(f.target.basepoint)[f.assignment]
    d_src = f.source.distances_from(f.source.basepoint)
    frontier = np.zeros(f.source.n, dtype=bool)
    frontier[list(f.source.frontier)] = True
    table = []
    touch_witnesses = []
    for r in truncation_radii:
        pre = d_tgt <= r + EPS
        radius = float(d_src[pre].max()) if pre.any() else 0.0
        touched = bool((pre & frontier).any())
        table.append({"radius": r, "preimage_radius": radius,
                      "touches_frontier": touched})
        if touched:
            hit = np.flatnonzero(pre & frontier)
            touch_witnesses.append(int(hit[np.argmax(d_src[hit])]))
        else:
            touch_witnesses.append(None)
    refuted = all(row["touches_frontier"] for row in table)
    params = {"truncation_radii": truncation_radii, "table": table}
    if refuted:
        return Certification("refuted", witness={
            "point": touch_witnesses[0],
            "target_radius": truncation_radii[0]},
            parameters=params, notes=(TREND_NOTE,))
    return Certification("certified", parameters=params, notes=(TREND_NOTE,))


def closeness(f, g):
    """sup over source points of the target distance between images."""
    if f.source is not g.source or f.target is not g.target:
        raise ValueError("closeness needs maps with identical spaces")
    sup = 0.0
    for src in np.unique(f.assignment):
        sel = f.assignment == src
        row = f.target.distances_from(src)
        sup = max(sup, float(row[g.assignment[sel]].max()))
    return sup


def closeness_trend(f, g, annuli=None):
    """Closeness restricted to annuli around the source basepoint.

    Returns (sup, table, growing): the global sup, per-annulus sups, and a
    flag set when the trend keeps growing out to the truncation (on a finite
    model an "unbounded" closeness can only be reported as such a trend).
    """
    sup = closeness(f, g)
    if annuli is None:
        annuli = default_radii(f.source)
    d_src = f.source.distances_from(f.source.basepoint)
    per_point = np.empty(f.source.n)
    for src in np.unique(f.assignment):
        sel = f.assignment == src
        per_point[sel] = f.target.distances_from(src)[g.assignment[sel]]
    table = []
    lo = 0.0
    for hi in annuli:
        mask = (d_src >= lo - EPS) & (d_src <= hi + EPS)
        table.append({"annulus": [lo, float(hi)],
                      "sup": float(per_point[mask].max()) if mask.any() else 0.0})
        lo = float(hi)
    sups = [row["sup"] for row in table if row["sup"] > 0]
    growing = len(sups) >= 2 and sups[-1] > sups[0] + EPS
    return sup, table, growing


def is_relative_coarse(g, f, truncation_radii=None, radii=None):
    """Certify that f o g is coarse (g is 'f-relative coarse')."""
    composite = compose(f, g)
    if radii is None:
        radii = default_radii(composite.source)
    profile = control_profile(composite, radii)
    cert = certify_coarse(composite, truncation_radii)
    cert.parameters["composite_profile"] = profile.rows()
    return cert


def profile_to_csv(profile):
    """CSV text with 'radius,bound' rows."""
    lines = ["radius,bound"]
    lines += [f"{r:.12g},{b:.12g}" for r, b in profile.rows()]
    return "\n".join(lines) + "\n"
