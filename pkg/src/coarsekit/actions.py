"""Isometric group actions, quotients, and the certification scans.

Actions are stored as explicit vertex permutations.  Scans that quantify over
every point (displacement, softness) exploit the action's own symmetry: the
quantity being scanned is constant along orbits, so one shortest-path sweep
per orbit representative is an exhaustive scan of the whole model.  That
reduction is only applied after the generators are verified to be exact
graph automorphisms (and to commute, for lattice kinds); otherwise the scan
falls back to every point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy import sparse

from .maps import Certification, CoarseMapData, Refuted, fibres_of
from .metric import EPS, BoundedSet, MetricSpace, space_from_edges


@dataclass(frozen=True)
class GroupElement:
    """Element of the acting group, canonically an integer exponent vector."""

    vector: tuple

    @property
    def is_identity(self):
        return all(v == 0 for v in self.vector)

    def compose(self, other):
        if len(self.vector) != len(other.vector):
            raise ValueError("elements come from different generator lists")
        return GroupElement(tuple(a + b for a, b in zip(self.vector, other.vector)))

    def inverse(self):
        return GroupElement(tuple(-v for v in self.vector))

    @property
    def label(self):
        if self.is_identity:
            return "e"
        return "(" + ",".join(str(v) for v in self.vector) + ")"


def _perm_power(perm, k):
    n = len(perm)
    out = np.arange(n)
    step = perm if k > 0 else np.argsort(perm)
    for _ in range(abs(k)):
        out = step[out]
    return out


class GroupAction:
    """Group acting on a MetricSpace by vertex permutations.

    ``generators`` are integer arrays of length space.n.  A -1 entry marks a
    point whose image leaves the model (only quotient_space tolerates these,
    and it reports the escape).  kind is "lattice" (commuting, Z^m) or
    "finite".
    """

    def __init__(self, space, generators, kind="lattice", names=None,
                 verify=True):
        self.space = space
        self.generators = [np.asarray(g, dtype=np.int64) for g in generators]
        self.kind = kind
        self.names = list(names) if names else [f"g{i}" for i in range(len(generators))]
        for g in self.generators:
            if g.shape != (space.n,):
                raise ValueError("generator permutation has wrong length")
            defined = g[g >= 0]
            if len(np.unique(defined)) != len(defined) or (defined >= space.n).any():
                raise ValueError("generator is not injective on its domain")
        self.partial = any((g < 0).any() for g in self.generators)
        if verify and not self.partial:
            cert = self.verify_isometries()
            if not cert.certified:
                raise ValueError(f"generator fails to be an isometry: {cert.witness}")
            if kind == "lattice":
                for a in self.generators:
                    for b in self.generators:
                        if not np.array_equal(a[b], b[a]):
                            raise ValueError("lattice kind requires commuting generators")
        self._elements_cache = {}

    # -- verification ------------------------------------------------------

    def verify_isometries(self, sample_pairs=2048, seed=0):
        """Exact automorphism check on graph kinds; closed-form pairs otherwise."""
        if self.space.is_graph:
            G = self.space.csgraph().tocoo()
            base = self._edge_key(G.row, G.col, G.data)
            for name, g in zip(self.names, self.generators):
                moved = self._edge_key(g[G.row], g[G.col], G.data)
                if not np.array_equal(base, moved):
                    return Certification("refuted",
                                         witness={"generator": name},
                                         parameters={"method": "edge-set"})
            return Certification("certified",
                                 parameters={"method": "edge-set",
                                             "edges": int(G.nnz)})
        rng = np.random.default_rng(seed)
        n = self.space.n
        total = n * (n - 1) // 2
        if total <= sample_pairs:
            ii, jj = np.triu_indices(n, k=1)
        else:
            ii = rng.integers(0, n, size=sample_pairs)
            jj = rng.integers(0, n, size=sample_pairs)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        if self.space.pair_fn is not None:
            dist = lambda aa, bb: self.space.pair_fn(self.space.coords[aa],
                                                     self.space.coords[bb])
        else:
            dist = lambda aa, bb: np.array(
                [self.space.distance(a, b) for a, b in zip(aa, bb)])
        d0 = dist(ii, jj)
        for name, g in zip(self.names, self.generators):
            d1 = dist(g[ii], g[jj])
            bad = np.abs(d0 - d1) > EPS
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                return Certification("refuted",
                                     witness={"generator": name,
                                              "pair": (int(ii[k]), int(jj[k])),
                                              "d": float(d0[k]),
                                              "d_moved": float(d1[k])},
                                     parameters={"method": "pair-sample"})
        return Certification("certified",
                             parameters={"method": "pair-sample",
                                         "pairs": int(len(ii))})

    @staticmethod
    def _edge_key(rows, cols, data):
        a = np.minimum(rows, cols)
        b = np.maximum(rows, cols)
        key = np.rec.fromarrays([a, b, data], names="a,b,w")
        key.sort()
        return key

    # -- group enumeration -------------------------------------------------

    def elements(self, word_radius=None, horizon=512):
        """Distinct elements as (GroupElement, permutation) pairs.

        word_radius=None closes the whole group generated inside the model
        (BFS over permutations, error beyond ``horizon`` elements);
        otherwise enumerates the l1 word ball of that radius.  Each distinct
        permutation keeps its first (shortest, then lexicographically
        smallest) exponent vector.
        """
        if self.partial:
            raise ValueError("partial generators do not form a group action")
        key = (word_radius, horizon)
        if key in self._elements_cache:
            return self._elements_cache[key]
        m = len(self.generators)
        n = self.space.n
        ident = np.arange(n)
        seen = {ident.tobytes(): GroupElement((0,) * m)}
        order = [(GroupElement((0,) * m), ident)]
        frontier = [(GroupElement((0,) * m), ident)]
        steps = []
        for i, g in enumerate(self.generators):
            vec = tuple(1 if j == i else 0 for j in range(m))
            steps.append((GroupElement(vec), g))
            steps.append((GroupElement(tuple(-v for v in vec)), np.argsort(g)))
        depth = 0
        while frontier:
            depth += 1
            if word_radius is not None and depth > word_radius:
                break
            nxt = []
            for el, perm in frontier:
                for stel, stperm in steps:
                    newperm = stperm[perm]
                    b = newperm.tobytes()
                    if b in seen:
                        continue
                    newel = el.compose(stel)
                    seen[b] = newel
                    order.append((newel, newperm))
                    nxt.append((newel, newperm))
                    if word_radius is None and len(order) > horizon:
                        raise ValueError(
                            f"group closure exceeds {horizon} elements; "
                            "pass a word_radius")
            frontier = nxt
        self._elements_cache[key] = order
        return order

    def perm_of(self, element):
        perms = [_perm_power(g, k) for g, k in zip(self.generators, element.vector)
                 if k != 0]
        out = np.arange(self.space.n)
        for p in perms:
            out = p[out]
        return out

    def orbit_components(self):
        """(labels, representatives): orbits of the generated group.

        Labels are contiguous ints ordered by smallest member id; the
        representative of each orbit is that smallest member.
        """
        n = self.space.n
        rows, cols = [], []
        for g in self.generators:
            src = np.flatnonzero(g >= 0)
            rows.append(src)
            cols.append(g[src])
        rows = np.concatenate(rows) if rows else np.empty(0, dtype=int)
        cols = np.concatenate(cols) if cols else np.empty(0, dtype=int)
        adj = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, raw = connected_components(adj, directed=False)
        uniq, first = np.unique(raw, return_index=True)
        order = np.argsort(first)
        relabel = np.empty(len(uniq), dtype=np.int64)
        relabel[order] = np.arange(len(uniq))
        return relabel[raw], first[order]


# ---------------------------------------------------------------------------
# displacement and hypothesis certification


def _displacement(action, word_radius=None):
    """min over non-identity g of d(x, g x), for every x, plus provenance.

    Exhaustive via orbit representatives: d(hx, g hx) = d(x, gx) whenever h
    is an isometry commuting with g, which holds for the action's own
    (verified, commuting) generator group.
    """
    elems = [e for e in action.elements(word_radius) if not e[0].is_identity]
    if not elems:
        return np.full(action.space.n, np.inf), {"elements": 0}
    labels, reps = action.orbit_components()
    disp = np.empty(action.space.n)
    for lab, r in enumerate(reps):
        row = action.space.distances_from(int(r))
        best = min(float(row[perm[r]]) for _, perm in elems)
        disp[labels == lab] = best
    prov = {"elements": len(elems),
            "word_radius": word_radius,
            "orbit_representatives": int(len(reps)),
            "scan": "orbit-representative (generators verified isometric "
                    "and commuting)"}
    return disp, prov


def min_displacement(action, word_radius=None):
    """C = min over sampled group elements g != e and all x of d(x, g·x)."""
    disp, _ = _displacement(action, word_radius)
    c = float(disp.min())
    if c <= EPS:
        fixed = int(np.argmin(disp))
        raise ValueError(f"action is not free: point {fixed} is (nearly) fixed")
    return c


def certify_uniform_coarse_discontinuity(action, R, word_radius=None):
    """Smallest basepoint ball K with: x outside every g(K) => d(x, gx) > R.

    Raises Refuted when the low-displacement set reaches the model frontier
    (no bounded K exists in any truncation trend).
    """
    space = action.space
    disp, prov = _displacement(action, word_radius)
    bad = np.flatnonzero(disp <= R + EPS)
    if bad.size == 0:
        return BoundedSet.empty(space)
    on_frontier = [int(x) for x in bad if x in space.frontier]
    if on_frontier:
        raise Refuted("low-displacement points reach the model frontier",
                      witness={"point": on_frontier[0],
                               "displacement": float(disp[on_frontier[0]]),
                               "R": R},
                      details=prov)
    elems = action.elements(word_radius)
    dbp = space.distances_from(space.basepoint)
    orbit_min = np.min(np.stack([dbp[perm] for _, perm in elems]), axis=0)
    r_star = float(orbit_min[bad].max())
    return BoundedSet(space, space.basepoint, r_star)


def saturation(action, bset, word_radius=None):
    """Point ids of U_g g(members of bset)."""
    members = bset.members()
    if members.size == 0:
        return members
    parts = [perm[members] for _, perm in action.elements(word_radius)]
    return np.unique(np.concatenate(parts))


def check_saturation_identity(action, q, bset, word_radius=None):
    """q^{-1}(q(K)) == U_g g(K), exactly, for the quotient map q."""
    sat = saturation(action, bset, word_radius)
    classes = np.unique(q.assignment[bset.members()]) if bset.members().size \
        else np.empty(0, dtype=int)
    pre = np.flatnonzero(np.isin(q.assignment, classes))
    ok = np.array_equal(np.sort(sat), np.sort(pre))
    return Certification("certified" if ok else "refuted",
                         witness=None if ok else {
                             "saturation_only": np.setdiff1d(sat, pre)[:5].tolist(),
                             "preimage_only": np.setdiff1d(pre, sat)[:5].tolist()},
                         parameters={"set_size": int(bset.members().size),
                                     "saturation_size": int(sat.size)})


def certify_scattered_fibres(q, R, action=None):
    """Smallest target ball K: fibre-mates outside q^{-1}(K) are > R apart.

    The scan is exhaustive: every point's R-ball is explored and checked for
    fibre-mates.  With a verified deck action the scan runs on orbit
    representatives only (mate distances are orbit-constant).
    """
    base, target = q.source, q.target
    fibres = fibres_of(q)
    if action is not None:
        if action.space is not base:
            raise ValueError("action acts on a different space than q's source")
        for name, g in zip(action.names, action.generators):
            if not np.array_equal(q.assignment[g], q.assignment):
                raise ValueError(f"generator {name} does not preserve fibres")
        labels, reps = action.orbit_components()
        sources = reps
    else:
        labels, reps, sources = None, None, np.arange(base.n)
    bad_mask = np.zeros(base.n, dtype=bool)
    witness = None
    for x in sources:
        x = int(x)
        row = base.distances_limited(x, R + EPS)
        mates = fibres[int(q.assignment[x])]
        mates = mates[mates != x]
        if mates.size == 0:
            continue
        dm = row[mates]
        close = mates[dm <= R + EPS]
        if close.size:
            bad_mask[x] = True
            if witness is None:
                witness = {"x": x, "mate": int(close[0]),
                           "d": float(row[close[0]])}
    if labels is not None:
        bad_labels = np.unique(labels[bad_mask])
        bad_mask = np.isin(labels, bad_labels)
    bad = np.flatnonzero(bad_mask)
    if bad.size == 0:
        return BoundedSet.empty(target)
    bad_imgs = np.unique(q.assignment[bad])
    hit_frontier = [int(y) for y in bad_imgs if y in target.frontier]
    if hit_frontier:
        raise Refuted("close fibre-mates occur out to the model frontier",
                      witness=witness,
                      details={"frontier_image": hit_frontier[0], "R": R})
    dbp = target.distances_from(target.basepoint)
    return BoundedSet(target, target.basepoint, float(dbp[bad_imgs].max()))


@dataclass
class SoftnessTable:
    """Softness bounds S(R) with the witnesses attaining them."""

    radii: np.ndarray
    bounds: np.ndarray
    witnesses: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.bounds = np.asarray(self.bounds, dtype=float)
        if (np.diff(self.radii) <= 0).any():
            raise ValueError("radii must be strictly increasing")
        if (np.diff(self.bounds) < -EPS).any():
            raise ValueError("softness bounds must be monotone in R")

    def S_at(self, R):
        """S at the smallest tabulated radius >= R."""
        idx = int(np.searchsorted(self.radii, R - EPS))
        if idx >= len(self.radii):
            raise ValueError(f"R={R} beyond certified grid "
                             f"(max {self.radii[-1]})")
        return float(self.bounds[idx])

    def rows(self):
        return [{"R": float(r), "S": float(s), "witness": w}
                for r, s, w in zip(self.radii, self.bounds, self.witnesses)]


def certify_soft_quotient(f, R_grid, action=None):
    """S(R) = max over d(f(x), y) <= R of min over x' in f^-1(y) of d(x, x').

    Exhaustive over the model (orbit representatives when a verified deck
    action is supplied); errors if f misses any target point.
    """
    base, target = f.source, f.target
    R_grid = sorted(float(r) for r in R_grid)
    covered = np.zeros(target.n, dtype=bool)
    covered[f.assignment] = True
    if not covered.all():
        missing = int(np.flatnonzero(~covered)[0])
        raise ValueError(f"map is not surjective: target point {missing} uncovered")
    fibres = fibres_of(f)
    if action is not None:
        if action.space is not base:
            raise ValueError("action acts on a different space than f's source")
        for name, g in zip(action.names, action.generators):
            if not np.array_equal(f.assignment[g], f.assignment):
                raise ValueError(f"generator {name} does not preserve fibres")
        _, sources = action.orbit_components()
        scan = "orbit-representative"
    else:
        sources = np.arange(base.n)
        scan = "all-points"
    r_max = R_grid[-1]
    S = {r: 0.0 for r in R_grid}
    wit = {r: None for r in R_grid}
    cap0 = 2.0 * r_max + 2.0
    for x in sources:
        x = int(x)
        drow = target.distances_from(int(f.assignment[x]))
        near = np.flatnonzero(drow <= r_max + EPS)
        cap = cap0
        while True:
            row = base.distances_limited(x, cap)
            mins = {}
            ok = True
            for y in near:
                fy = fibres[int(y)]
                dmin = float(row[fy].min())
                if not np.isfinite(dmin):
                    ok = False
                    break
                mins[int(y)] = (dmin, int(fy[np.argmin(row[fy])]))
            if ok:
                break
            cap *= 2.0
            if cap > 64.0 * (r_max + 1.0):
                raise ValueError(f"fibre unreachable from point {x} within "
                                 f"distance {cap}; model may be disconnected")
        for r in R_grid:
            for y in near[drow[near] <= r + EPS]:
                dmin, xprime = mins[int(y)]
                if dmin > S[r]:
                    S[r] = dmin
                    wit[r] = {"x": x, "y": int(y), "xprime": xprime,
                              "target_gap": float(drow[y])}
    bounds = np.maximum.accumulate([S[r] for r in R_grid])
    return SoftnessTable(np.array(R_grid), bounds,
                         [wit[r] for r in R_grid],
                         provenance={"scan": scan,
                                     "sources": int(len(sources))})


# ---------------------------------------------------------------------------
# quotients


@dataclass
class QuotientSpace:
    space: MetricSpace
    classes: np.ndarray
    q: CoarseMapData

    def orbit_min_distance(self, x, cls):
        """min over y' in class cls of d_base(x, y') — the defining formula."""
        members = np.flatnonzero(self.classes == cls)
        return float(self.q.source.distances_from(int(x))[members].min())


def quotient_space(action, orbit_horizon=10 ** 6):
    """Orbit space with d([x],[y]) = min over representatives.

    Orbits are closed under the generators inside the model; an orbit that
    runs off the model (partial generator entry) is an error naming the
    escaping point.  Graph bases get the projected-edge quotient graph
    (paths project and lift edge-by-edge, so its metric equals the orbit-min
    formula for isometric actions); closed-form bases get a dense min-matrix.
    """
    base = action.space
    labels, reps = action.orbit_components()
    if labels.max() + 1 > orbit_horizon:
        raise ValueError("orbit count exceeds horizon")
    for g in action.generators:
        esc = np.flatnonzero(g < 0)
        if esc.size:
            raise ValueError(f"orbit of point {int(esc[0])} escapes the finite "
                             "model without closing; enlarge or wrap the model")
    nq = int(labels.max()) + 1
    if base.is_graph:
        G = base.csgraph().tocoo()
        qi, qj = labels[G.row], labels[G.col]
        keep = qi != qj
        order = np.lexsort((G.data[keep], qj[keep], qi[keep]))
        qi, qj, w = qi[keep][order], qj[keep][order], G.data[keep][order]
        first = np.ones(len(qi), dtype=bool)
        first[1:] = (np.diff(qi) != 0) | (np.diff(qj) != 0)
        edges = [(int(a), int(b), float(c))
                 for a, b, c in zip(qi[first], qj[first], w[first])
                 if a < b]
        qspace = space_from_edges(
            nq, edges, basepoint=int(labels[base.basepoint]),
            coords=base.coords[reps],
            frontier=np.unique(labels[list(base.frontier)]) if base.frontier else (),
            kind="quotient-graph")
    else:
        D = np.stack([base.distances_from(i) for i in range(base.n)])
        M = np.full((nq, nq), np.inf)
        for a in range(nq):
            ia = labels == a
            for b in range(a, nq):
                v = float(D[np.ix_(ia, labels == b)].min())
                M[a, b] = M[b, a] = v
            M[a, a] = 0.0
        qspace = MetricSpace("matrix", base.coords[reps],
                             basepoint=int(labels[base.basepoint]),
                             frontier=np.unique(labels[list(base.frontier)])
                             if base.frontier else (),
                             matrix=M)
    qspace.meta["quotient_of"] = base.meta.get("model", base.kind)
    qmap = CoarseMapData(base, qspace, labels.astype(np.int64), profile=None)
    return QuotientSpace(qspace, labels, qmap)


# ---------------------------------------------------------------------------
# lift certificates


@dataclass
class LiftCertificate:
    """Certified softness / scatter / discontinuity tables for one projection."""

    softness: SoftnessTable
    scatter: dict = None
    discontinuity: dict = None
    provenance: dict = field(default_factory=dict)

    def S_at(self, R):
        return self.softness.S_at(R)

    def scatter_at(self, R):
        if not self.scatter:
            raise ValueError("certificate carries no scattered-fibre table")
        for r in sorted(self.scatter):
            if r >= R - EPS:
                return self.scatter[r]
        raise ValueError(f"R={R} beyond scattered-fibre grid "
                         f"(max {max(self.scatter)})")

    def tables_json(self):
        out = {"softness": self.softness.rows(),
               "provenance": self.provenance}
        if self.scatter:
            out["scatter"] = [
                {"R": float(r), "center": int(b.center),
                 "radius": float(b.radius), "empty": bool(b.is_empty)}
                for r, b in sorted(self.scatter.items())]
        if self.discontinuity:
            out["discontinuity"] = [
                {"R": float(r), "center": int(b.center),
                 "radius": float(b.radius), "empty": bool(b.is_empty)}
                for r, b in sorted(self.discontinuity.items())]
        return out


def build_lift_certificate(pi, R_grid, action=None, include_scatter=True,
                           include_discontinuity=False, word_radius=None):
    """Assemble the certificate a lift run consumes, scan by scan."""
    softness = certify_soft_quotient(pi, R_grid, action=action)
    scatter = None
    if include_scatter:
        scatter = {float(r): certify_scattered_fibres(pi, r, action=action)
                   for r in R_grid}
    discont = None
    if include_discontinuity:
        if action is None:
            raise ValueError("discontinuity table needs the action")
        discont = {float(r): certify_uniform_coarse_discontinuity(
            action, r, word_radius) for r in R_grid}
    prov = {"R_grid": [float(r) for r in R_grid],
            "word_radius": word_radius,
            "softness_scan": softness.provenance}
    return LiftCertificate(softness, scatter, discont, prov)
