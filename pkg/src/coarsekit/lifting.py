"""Constructive homotopy lifting against a certified projection.

The lift marches each cylinder column upward one grid step at a time,
choosing the next point inside the fibre of the downstairs value within the
certified step budget T = S(rho(delta)).  Selection is nearest-first with a
deterministic tie-break, so runs are reproducible bit-for-bit; swapping the
tie-break order is how the uniqueness statement gets exercised.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import Certification, CoarseMapData, ControlProfile, fibres_of
from .metric import EPS, BoundedSet


class StuckLift(Exception):
    """No fibre point within the certified step budget (exit code 4)."""

    def __init__(self, base_id, t, details=None):
        super().__init__(f"lift stuck at column {base_id}, t={t}")
        self.base_id = base_id
        self.t = t
        self.details = details or {}


@dataclass
class Homotopy:
    """Map out of a p-cylinder, stored as one target id per cylinder point."""

    cylinder: object            # PCylinder
    target: object              # MetricSpace
    assignment: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.shape != (self.cylinder.n,):
            raise ValueError("assignment must cover every cylinder point")
        if self.assignment.min() < 0 or self.assignment.max() >= self.target.n:
            raise ValueError("assignment hits unknown target ids")

    def as_map(self):
        return CoarseMapData(self.cylinder.space, self.target, self.assignment)

    def endpoint0(self):
        return CoarseMapData(self.cylinder.base, self.target,
                             self.assignment[self.cylinder.i0_ids])

    def endpoint1(self):
        return CoarseMapData(self.cylinder.base, self.target,
                             self.assignment[self.cylinder.i1_ids])

    def value(self, base_id, k):
        return int(self.assignment[self.cylinder.col_start[base_id] + k])


@dataclass
class RayMap:
    """Coarse ray: t-grid of R+ -> target points."""

    target: object
    assignment: np.ndarray
    t_step: float
    profile: ControlProfile | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.ndim != 1 or self.assignment.size == 0:
            raise ValueError("ray needs at least one point")
        if self.assignment.min() < 0 or self.assignment.max() >= self.target.n:
            raise ValueError("assignment hits unknown target ids")

    def __len__(self):
        return int(self.assignment.size)

    def t_values(self):
        return np.arange(len(self)) * self.t_step

    def shifted(self, perm, label=None):
        """The ray g o b for a vertex permutation g."""
        out = RayMap(self.target, perm[self.assignment], self.t_step,
                     meta=dict(self.meta))
        if label is not None:
            out.meta["shifted_by"] = label
        return out


@dataclass
class LoopMap:
    """Map from a cone_interval c([0,1]) whose i0 and i1 edges equal a ray."""

    cylinder: object
    target: object
    assignment: np.ndarray
    base: RayMap
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.shape != (self.cylinder.n,):
            raise ValueError("assignment must cover every cylinder point")
        nb = self.cylinder.base.n
        if len(self.base) != nb:
            raise ValueError("base ray and cylinder grids disagree")
        e0 = self.assignment[self.cylinder.i0_ids]
        e1 = self.assignment[self.cylinder.i1_ids]
        if not (np.array_equal(e0, self.base.assignment)
                and np.array_equal(e1, self.base.assignment)):
            bad = int(np.flatnonzero((e0 != self.base.assignment)
                                     | (e1 != self.base.assignment))[0])
            raise ValueError(f"loop endpoints differ from the base ray "
                             f"at column {bad}")

    def as_homotopy(self):
        return Homotopy(self.cylinder, self.target, self.assignment,
                        meta={"loop": True})


# ---------------------------------------------------------------------------
# step-size measurement


def vertical_step_sup(f):
    """sup over columns of d_target(f(x,t), f(x,t+delta)): the rho(delta) the
    marching actually consumes."""
    cyl, tgt = f.cylinder, f.target
    sup = 0.0
    a_ids, b_ids = [], []
    for x in range(cyl.base.n):
        col = cyl.column(x)
        if len(col) < 2:
            continue
        a_ids.append(f.assignment[col[:-1]])
        b_ids.append(f.assignment[col[1:]])
    if not a_ids:
        return 0.0
    a_ids = np.concatenate(a_ids)
    b_ids = np.concatenate(b_ids)
    for src in np.unique(a_ids):
        row = tgt.distances_from(int(src))
        sup = max(sup, float(row[b_ids[a_ids == src]].max()))
    return sup


# ---------------------------------------------------------------------------
# the lifting algorithm


def lift_homotopy(pi, cert, f, f0, tie_break="nearest-smallest",
                  rho_delta=None):
    """Lift the homotopy f through pi, starting from f0.

    Marches each column upward, placing the next point inside
    pi^-1(f(x, t+delta)) within T = cert.S_at(rho_delta) of the current
    point; rho_delta defaults to the measured per-step displacement of f.
    Tie-breaks: "nearest-smallest" (default) or "nearest-largest" id.
    """
    if tie_break not in ("nearest-smallest", "nearest-largest"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    upstairs, down = pi.source, pi.target
    cyl = f.cylinder
    if f.target is not down:
        raise ValueError("f must land in pi's target")
    if f0.target is not upstairs:
        raise ValueError("f0 must land in pi's source")
    if f0.assignment.shape != (cyl.base.n,):
        raise ValueError("f0 must be defined on the cylinder base")
    init_down = f.assignment[cyl.i0_ids]
    if not np.array_equal(pi.assignment[f0.assignment], init_down):
        bad = int(np.flatnonzero(pi.assignment[f0.assignment] != init_down)[0])
        raise ValueError(f"pi(f0) != f(i0) at base point {bad}: "
                         "commutation precondition fails")
    if rho_delta is None:
        rho_delta = vertical_step_sup(f)
    T = cert.S_at(rho_delta)
    fibres = fibres_of(pi)
    out = np.full(cyl.n, -1, dtype=np.int64)
    for x in range(cyl.base.n):
        col = cyl.column(x)
        cur = int(f0.assignment[x])
        out[col[0]] = cur
        for k in range(1, len(col)):
            fibre = fibres[int(f.assignment[col[k]])]
            row = upstairs.distances_limited(cur, T + EPS)
            dc = row[fibre]
            ok = dc <= T + EPS
            if not ok.any():
                raise StuckLift(x, k * cyl.t_step,
                                {"current": cur, "T": T,
                                 "nearest_fibre_gap": float(np.nanmin(
                                     np.where(np.isfinite(dc), dc, np.nan)))
                                 if np.isfinite(dc).any() else None})
            cand, dists = fibre[ok], dc[ok]
            if tie_break == "nearest-smallest":
                pick = int(cand[np.lexsort((cand, dists))[0]])
            else:
                pick = int(cand[np.lexsort((-cand, dists))[0]])
            out[col[k]] = pick
            cur = pick
    return Homotopy(cyl, upstairs, out,
                    meta={"T": float(T), "rho_delta": float(rho_delta),
                          "tie_break": tie_break, "lift": True})


def certified_region_ids(f, cert, S, T):
    """Cylinder ids in L x R+ where L = columns meeting f^{-1}(K(2S+2T)).

    This is the bounded region the uniqueness statement excludes: outside it
    verified lifts agree and the S-apart claim holds.
    """
    K = cert.scatter_at(2.0 * S + 2.0 * T)
    cyl = f.cylinder
    if K.is_empty:
        return np.empty(0, dtype=int)
    kmask = np.zeros(f.target.n, dtype=bool)
    kmask[K.members()] = True
    bad_cols = np.unique(cyl.point_base[kmask[f.assignment]])
    return np.flatnonzero(np.isin(cyl.point_base, bad_cols))


def verify_lift(pi, f, f_tilde, f0, cert=None, base_radius=1.0):
    """Check a claimed lift: commutation, initial condition, step budget,
    and (when the certificate carries a scattered-fibre table) the S-apart
    bound for same-level pairs of columns at base distance <= base_radius
    outside the certified region."""
    cyl = f.cylinder
    stages = {}
    comm = pi.assignment[f_tilde.assignment] == f.assignment
    if not comm.all():
        bad = int(np.flatnonzero(~comm)[0])
        return Certification("refuted",
                             witness={"stage": "commutation", "point": bad},
                             parameters={"stages": {"commutation": "refuted"}})
    stages["commutation"] = "exact"
    init = f_tilde.assignment[cyl.i0_ids] == f0.assignment
    if not init.all():
        bad = int(np.flatnonzero(~init)[0])
        return Certification("refuted",
                             witness={"stage": "initial", "column": bad},
                             parameters={"stages": stages})
    stages["initial"] = "exact"

    rho_delta = f_tilde.meta.get("rho_delta")
    if rho_delta is None:
        rho_delta = vertical_step_sup(f)
    T = f_tilde.meta.get("T")
    if T is None:
        if cert is None:
            raise ValueError("need a certificate (or lift metadata) for the "
                             "step-budget stage")
        T = cert.S_at(rho_delta)
    worst_step = vertical_step_sup(f_tilde)
    if worst_step > T + EPS:
        return Certification("refuted",
                             witness={"stage": "step", "worst": worst_step,
                                      "T": float(T)},
                             parameters={"stages": stages})
    stages["step"] = {"worst": worst_step, "T": float(T)}

    if cert is None or not cert.scatter:
        stages["profile"] = "skipped (no scattered-fibre table)"
        return Certification("certified", parameters={"stages": stages})

    base = cyl.base
    pairs = []
    for x in range(base.n):
        near = np.flatnonzero(base.distances_from(x) <= base_radius + EPS)
        pairs.extend((x, int(y)) for y in near if y > x)
    r_down = 0.0
    for x, y in pairs:
        kmax = min(cyl.col_len[x], cyl.col_len[y])
        a = f.assignment[cyl.col_start[x] + np.arange(kmax)]
        b = f.assignment[cyl.col_start[y] + np.arange(kmax)]
        for src in np.unique(a):
            row = f.target.distances_from(int(src))
            r_down = max(r_down, float(row[b[a == src]].max()))
    S = cert.S_at(r_down)
    region = set(certified_region_ids(f, cert, S, T).tolist())
    worst = 0.0
    witness = None
    for x, y in pairs:
        kmax = min(cyl.col_len[x], cyl.col_len[y])
        ia = cyl.col_start[x] + np.arange(kmax)
        ib = cyl.col_start[y] + np.arange(kmax)
        keep = np.array([i not in region and j not in region
                         for i, j in zip(ia, ib)])
        if not keep.any():
            continue
        a = f_tilde.assignment[ia[keep]]
        b = f_tilde.assignment[ib[keep]]
        for src in np.unique(a):
            row = pi.source.distances_from(int(src))
            m = float(row[b[a == src]].max())
            if m > worst:
                worst = m
                witness = {"columns": (x, y)}
    if worst > S + EPS:
        return Certification("refuted",
                             witness={"stage": "profile", "worst": worst,
                                      "S": float(S), **(witness or {})},
                             parameters={"stages": stages})
    stages["profile"] = {"worst": worst, "S": float(S),
                         "base_radius": base_radius}
    return Certification("certified", parameters={"stages": stages})


def uniqueness_defect(f_tilde, f_tilde_prime, pi=None, f=None, f0=None):
    """Smallest basepoint ball in the cylinder containing every disagreement.

    Both arguments must lift the same homotopy from the same initial map
    (verified when pi/f/f0 are supplied, or via lift metadata).  Raises
    Refuted when disagreements persist out to the cylinder frontier.
    """
    from .maps import Refuted
    a, b = f_tilde, f_tilde_prime
    if a.cylinder is not b.cylinder:
        raise ValueError("lifts live over different cylinders")
    if pi is not None and f is not None:
        for g in (a, b):
            if not np.array_equal(pi.assignment[g.assignment], f.assignment):
                raise ValueError("argument does not lift f through pi")
    if f0 is not None:
        for g in (a, b):
            if not np.array_equal(g.assignment[a.cylinder.i0_ids],
                                  f0.assignment):
                raise ValueError("arguments start from different initial maps")
    space = a.cylinder.space
    dis = np.flatnonzero(a.assignment != b.assignment)
    if dis.size == 0:
        return BoundedSet.empty(space)
    on_frontier = [int(i) for i in dis if i in space.frontier]
    if on_frontier:
        raise Refuted("lifts disagree out to the cylinder frontier",
                      witness={"point": on_frontier[0]})
    row = space.distances_from(space.basepoint)
    return BoundedSet(space, space.basepoint, float(row[dis].max()))


# ---------------------------------------------------------------------------
# rays, the correspondence, classification


def lifts_equivalent(b1, b2, horizon, pi=None):
    """Equivalence of ray lifts: disagreements confined below the horizon.

    Returns a dict verdict {equivalent, t0, latest, horizon}.  t0 is the
    largest disagreement t (0.0 when the rays agree everywhere).
    """
    if b1.target is not b2.target:
        raise ValueError("rays land in different targets")
    if len(b1) != len(b2) or abs(b1.t_step - b2.t_step) > EPS:
        raise ValueError("rays have different grids")
    if pi is not None:
        if not np.array_equal(pi.assignment[b1.assignment],
                              pi.assignment[b2.assignment]):
            bad = int(np.flatnonzero(
                pi.assignment[b1.assignment]
                != pi.assignment[b2.assignment])[0])
            raise ValueError(f"rays project to different downstairs rays "
                             f"(first difference at index {bad})")
    dis = np.flatnonzero(b1.assignment != b2.assignment)
    t_end = (len(b1) - 1) * b1.t_step
    effective = min(float(horizon), t_end)
    if dis.size == 0:
        return {"equivalent": True, "t0": 0.0, "latest": None,
                "horizon": float(horizon)}
    t_latest = float(dis.max() * b1.t_step)
    if t_latest < effective - EPS:
        return {"equivalent": True, "t0": t_latest,
                "latest": int(dis.max()), "horizon": float(horizon)}
    return {"equivalent": False, "t0": None, "latest": int(dis.max()),
            "horizon": float(horizon)}


def lifting_correspondence(pi, cert, alpha, b_prime,
                           tie_break="nearest-smallest"):
    """Phi(alpha): lift the loop as a homotopy with initial edge b_prime and
    return its terminal edge, a new lift of the downstairs base ray."""
    cyl = alpha.cylinder
    nb = cyl.base.n
    if len(b_prime) < nb:
        raise ValueError("basepoint lift shorter than the loop's base grid")
    b0 = b_prime.assignment[:nb]
    if not np.array_equal(pi.assignment[b0], alpha.base.assignment):
        raise ValueError("b_prime does not lift the loop's base ray")
    f0 = CoarseMapData(cyl.base, pi.source, b0)
    f = alpha.as_homotopy()
    lifted = lift_homotopy(pi, cert, f, f0, tie_break=tie_break)
    terminal = lifted.assignment[cyl.i1_ids]
    return RayMap(pi.source, terminal, cyl.t_step,
                  meta={"phi_of": getattr(alpha, "name", None),
                        "tie_break": tie_break,
                        "homotopy": lifted})


def classify_lift(action, b_prime, b_dd, horizon, word_radius=4, pi=None):
    """The unique word-ball element g with b_dd ~ g o b_prime up to horizon."""
    if pi is not None:
        down1 = pi.assignment[b_prime.assignment[:len(b_dd)]]
        down2 = pi.assignment[b_dd.assignment]
        if not np.array_equal(down1, down2):
            raise ValueError("rays are not lifts of the same downstairs ray")
    matches = []
    for el, perm in action.elements(word_radius):
        cand = RayMap(b_prime.target,
                      perm[b_prime.assignment[:len(b_dd)]], b_prime.t_step)
        verdict = lifts_equivalent(b_dd, cand, horizon)
        if verdict["equivalent"]:
            matches.append((el, verdict))
    if not matches:
        raise ValueError("no word-ball element matches up to the horizon "
                         "(enlarge the horizon or the word radius)")
    if len(matches) > 1:
        labels = [el.label for el, _ in matches]
        raise ValueError(f"multiple matches {labels}: the action is not "
                         "coarsely discontinuous at this scale")
    return matches[0][0]


def verify_ses_instance(action, pi, cert, b_prime, loops, horizon,
                        word_radius=4, homomorphism_pairs=True):
    """Classify each loop's terminal lift and check the group structure.

    loops: dict label -> (LoopMap, expected GroupElement or None).
    Checks g(alpha * beta) = g(alpha) + g(beta) over all pairs (when
    requested) and kernel witnesses for identity classifications.
    """
    from .homotopies import concatenate
    report = {"loops": {}, "homomorphism": [], "kernel": []}
    phis = {}
    gs = {}
    for label, (loop, expected) in loops.items():
        phi = lifting_correspondence(pi, cert, loop, b_prime)
        g = classify_lift(action, b_prime, phi, horizon, word_radius, pi=pi)
        phis[label] = phi
        gs[label] = g
        entry = {"g": list(g.vector)}
        if expected is not None:
            entry["expected"] = list(expected.vector)
            entry["matches_expected"] = bool(g.vector == expected.vector)
        report["loops"][label] = entry
    if homomorphism_pairs:
        for la, (loop_a, _) in loops.items():
            for lb, (loop_b, _) in loops.items():
                ab = concatenate(loop_a, loop_b)
                phi = lifting_correspondence(pi, cert, ab, b_prime)
                g_ab = classify_lift(action, b_prime, phi, horizon,
                                     word_radius, pi=pi)
                ok = g_ab.vector == gs[la].compose(gs[lb]).vector
                report["homomorphism"].append(
                    {"a": la, "b": lb, "g_a": list(gs[la].vector),
                     "g_b": list(gs[lb].vector), "g_ab": list(g_ab.vector),
                     "ok": bool(ok)})
    for label, g in gs.items():
        if g.is_identity:
            verdict = lifts_equivalent(
                phis[label],
                RayMap(b_prime.target, b_prime.assignment[:len(phis[label])],
                       b_prime.t_step),
                horizon)
            report["kernel"].append({"loop": label,
                                     "terminal_equals_base": verdict})
    return report
