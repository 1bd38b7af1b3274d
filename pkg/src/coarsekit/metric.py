"""Finite metric models: grids, closed forms, geodesic graphs, product cylinders.

A space is a fixed, immutable list of points (ids 0..n-1, enumerated
lexicographically by coordinates at construction) together with a distance
oracle.  Three backends are supported:

* closed form -- a vectorized pair function on coordinates,
* geodesic graph -- nonnegative edge weights, single-source Dijkstra with
  per-source caching,
* product-over-base -- for cylinders X x R with the l2 combination, reusing
  the base space's oracle.

Spaces built from a truncated infinite model record the truncation shell in
``frontier``; certifications use it to tell "genuinely bounded" from "ran off
the model".
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

PointId = int

EPS = 1e-9


class MetricSpace:
    """Immutable finite metric space with a deterministic point order."""

    def __init__(self, kind, coords, basepoint=0, frontier=(), *,
                 graph=None, graph_factory=None, pair_fn=None,
                 cylinder_base=None, matrix=None, meta=None):
        self.kind = kind
        self.coords = np.asarray(coords, dtype=float)
        if self.coords.ndim == 1:
            self.coords = self.coords[:, None]
        self.basepoint = int(basepoint)
        self.frontier = frozenset(int(i) for i in frontier)
        self.meta = dict(meta or {})
        self._graph = graph
        self._graph_factory = graph_factory
        self._pair_fn = pair_fn
        self._cyl = cylinder_base  # (base_space, base_ids, t_values)
        self._matrix = matrix
        self._cache = {}
        self._lock = threading.Lock()
        if not (0 <= self.basepoint < self.n):
            raise ValueError("basepoint outside the space")

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def is_graph(self):
        return self._graph is not None or self._graph_factory is not None

    def _csr(self):
        if self._graph is None:
            with self._lock:
                if self._graph is None:
                    self._graph = self._graph_factory()
        return self._graph

    def csgraph(self):
        """The underlying CSR adjacency (graph kinds only)."""
        if not self.is_graph:
            raise ValueError("space has no graph backend")
        return self._csr()

    @property
    def pair_fn(self):
        return self._pair_fn

    def _check(self, a):
        a = int(a)
        if not (0 <= a < self.n):
            raise KeyError(f"unknown point id {a}")
        return a

    def distances_from(self, a):
        """Full distance row from ``a``; cached on graph kinds."""
        a = self._check(a)
        if self._pair_fn is not None:
            return self._pair_fn(self.coords[a][None, :], self.coords).ravel()
        if self._cyl is not None:
            base, base_ids, tvals = self._cyl
            row = base.distances_from(base_ids[a])
            return np.hypot(row[base_ids], tvals - tvals[a])
        if self._matrix is not None:
            return self._matrix[a]
        with self._lock:
            row = self._cache.get(a)
        if row is None:
            row = dijkstra(self._csr(), directed=True, indices=[a])[0]
            row.setflags(write=False)
            with self._lock:
                self._cache.setdefault(a, row)
                row = self._cache[a]
        return row

    def distances_limited(self, a, limit):
        """Distance row from ``a`` with entries beyond ``limit`` left at inf."""
        a = self._check(a)
        if self.is_graph:
            with self._lock:
                row = self._cache.get(a)
            if row is not None:
                out = row.copy()
                out[out > limit] = np.inf
                return out
            return dijkstra(self._csr(), directed=True, indices=[a],
                            limit=limit)[0]
        row = self.distances_from(a).copy()
        row[row > limit] = np.inf
        return row

    def min_distances(self, sources, limit=None):
        """Pointwise min of the rows from ``sources`` (multi-source query)."""
        sources = [self._check(s) for s in sources]
        if not sources:
            return np.full(self.n, np.inf)
        if self.is_graph:
            return dijkstra(self._csr(), directed=True, indices=sources,
                            min_only=True, limit=np.inf if limit is None else limit)
        out = self.distances_from(sources[0]).copy()
        for s in sources[1:]:
            np.minimum(out, self.distances_from(s), out=out)
        if limit is not None:
            out[out > limit] = np.inf
        return out

    def distance(self, a, b):
        a, b = self._check(a), self._check(b)
        if self._pair_fn is not None:
            return float(self._pair_fn(self.coords[a][None, :],
                                       self.coords[b][None, :])[0])
        if self._cyl is not None:
            base, base_ids, tvals = self._cyl
            return float(np.hypot(base.distance(base_ids[a], base_ids[b]),
                                  tvals[a] - tvals[b]))
        return float(self.distances_from(a)[b])

    def eccentricity(self, a=None):
        """Max finite distance from ``a`` (default: basepoint)."""
        row = self.distances_from(self.basepoint if a is None else a)
        finite = row[np.isfinite(row)]
        return float(finite.max()) if finite.size else 0.0

    def __repr__(self):
        return f"MetricSpace(kind={self.kind!r}, n={self.n})"


@dataclass(frozen=True)
class BoundedSet:
    """Canonical bounded set: the ball of ``radius`` around ``center``."""

    space: MetricSpace
    center: PointId
    radius: float
    is_empty: bool = False

    @classmethod
    def empty(cls, space):
        return cls(space, space.basepoint, 0.0, is_empty=True)

    def members(self):
        if self.is_empty:
            return np.empty(0, dtype=int)
        row = self.space.distances_from(self.center)
        return np.flatnonzero(row <= self.radius + EPS)

    def contains(self, point):
        if self.is_empty:
            return False
        return self.space.distance(self.center, point) <= self.radius + EPS


def ball(space, center, radius):
    """Points within ``radius`` of ``center`` as a BoundedSet."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return BoundedSet(space, int(center), float(radius))


def outside(space, K):
    """Complement of a bounded set; partitions the space with K.members()."""
    if K.space is not space:
        raise ValueError("bounded set belongs to a different space")
    mask = np.ones(space.n, dtype=bool)
    mask[K.members()] = False
    return np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# constructors


def _euclid(a, b):
    return np.sqrt(((a - b) ** 2).sum(axis=-1))


def build_grid_space(dim, extent, step):
    """Regular grid {0, step, ..., extent}^dim with the Euclidean metric.

    Points are enumerated lexicographically; the basepoint is the origin and
    the frontier is the outer shell where the infinite model was cut.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if extent < step:
        raise ValueError("extent must be at least one step")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    axis = np.arange(0.0, extent + step / 2, step)
    if dim == 1:
        coords = axis[:, None]
        frontier = [0, len(axis) - 1]
    else:
        coords = np.array([(x, y) for x in axis for y in axis])
        top = axis[-1]
        frontier = np.flatnonzero(
            (coords == 0).any(axis=1) | (np.isclose(coords, top)).any(axis=1))
    return MetricSpace("grid", coords, basepoint=0, frontier=frontier,
                       pair_fn=_euclid,
                       meta={"dim": dim, "extent": float(extent),
                             "step": float(step)})


def ray_grid(extent, step):
    """Grid model of the half line [0, extent]; only the far end is a cut."""
    if step <= 0 or extent < step:
        raise ValueError("need step > 0 and extent >= step")
    axis = np.arange(0.0, extent + step / 2, step)
    return MetricSpace("grid", axis[:, None], basepoint=0,
                       frontier=[len(axis) - 1], pair_fn=_euclid,
                       meta={"dim": 1, "extent": float(extent),
                             "step": float(step), "ray": True})


def point_space():
    return MetricSpace("closed-form", np.zeros((1, 1)), pair_fn=_euclid)


def space_from_edges(n, edges, basepoint=0, coords=None, frontier=(),
                     kind="geodesic-graph"):
    """Weighted undirected graph space from (i, j, w) triples."""
    edges = list(edges)
    rows = [int(e[0]) for e in edges] + [int(e[1]) for e in edges]
    cols = [int(e[1]) for e in edges] + [int(e[0]) for e in edges]
    data = [float(e[2]) for e in edges] * 2
    if any(w < 0 for w in data):
        raise ValueError("edge weights must be nonnegative")
    csr = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    if coords is None:
        coords = np.arange(n, dtype=float)[:, None]
    return MetricSpace(kind, coords, basepoint=basepoint, frontier=frontier,
                       graph=csr, meta={"edges": edges})


# ---------------------------------------------------------------------------
# serialization


def space_to_descriptor(space):
    """JSON-friendly descriptor {kind, dim, extent, step, edges?, basepoint}."""
    d = {"kind": space.kind, "basepoint": space.basepoint,
         "dim": space.meta.get("dim"), "extent": space.meta.get("extent"),
         "step": space.meta.get("step")}
    if "edges" in space.meta:
        d["edges"] = [[int(i), int(j), float(w)]
                      for i, j, w in space.meta["edges"]]
        d["n"] = space.n
    if space.meta.get("ray"):
        d["ray"] = True
    return d


def space_from_descriptor(d):
    kind = d.get("kind")
    if kind == "grid":
        if d.get("ray"):
            return ray_grid(d["extent"], d["step"])
        return build_grid_space(d["dim"], d["extent"], d["step"])
    if "edges" in d:
        return space_from_edges(d["n"], d["edges"],
                                basepoint=d.get("basepoint", 0), kind=kind)
    raise ValueError(f"cannot rebuild a {kind!r} space from a descriptor")


def dump_edge_list(space):
    """Edge-list text, one 'i j w' line per edge."""
    edges = space.meta.get("edges")
    if edges is None:
        raise ValueError("space has no stored edge list")
    return "\n".join(f"{int(i)} {int(j)} {w:.12g}" for i, j, w in edges) + "\n"


def load_edge_list(text, basepoint=0):
    edges = []
    n = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'i j w'")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        edges.append((i, j, w))
        n = max(n, i + 1, j + 1)
    return space_from_edges(n, edges, basepoint=basepoint)


def save_space(path, space):
    with open(path, "w") as fh:
        json.dump(space_to_descriptor(space), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_space(path):
    with open(path) as fh:
        return space_from_descriptor(json.load(fh))
