"""Independent referee for the loop classifications.

The tracker reconstructs, by plain angle arithmetic at floating-point
resolution, what the unique continuous lift of each column track would do:
unwrap the angular steps and count net laps.  It touches no graphs, fibres,
actions, or marching code, so agreement with the lifting pipeline is a real
cross-check rather than a tautology.
"""
from __future__ import annotations

import numpy as np

WRAP_KINDS = ("circle", "flat-torus")


def column_windings(loop, axis=0):
    """Net signed laps of each column's track around the given model axis.

    Works on the loop as built (grid data).  Per-step differences are
    wrapped to (-1/2, 1/2] laps, which reads off the continuous lift as long
    as no single grid step covers more than half the circumference; columns
    too short for that show up as outliers in the consensus report.  Because
    each column starts and ends at the same base-ray point, the net lap
    count is an exact integer up to float roundoff (checked).
    """
    cone = getattr(loop.target, "cone", None)
    if cone is None or cone.model.kind not in WRAP_KINDS:
        raise ValueError("winding oracle needs a loop into a cone over a "
                         "wrapped model")
    circ = cone.model.circumferences[axis]
    track = cone.col_coords[loop.assignment // cone.nlev][:, axis] / circ
    cyl = loop.cylinder
    out = np.zeros(cyl.base.n, dtype=np.int64)
    for i in range(cyl.base.n):
        col = cyl.column(i)
        if len(col) < 2:
            continue
        d = np.diff(track[col])
        d -= np.rint(d)
        w = float(d.sum())
        if abs(w - round(w)) > 1e-6:
            raise AssertionError(f"column {i}: net winding {w} is not an "
                                 "integer; the track does not close")
        out[i] = round(w)
    return out


def winding_report(loop, axis=0, top_fraction=0.5):
    """Consensus lap count over the columns long enough to track reliably.

    Takes the columns in the top ``top_fraction`` of the x-range, reports
    their modal winding, and how unanimous they are.  Short columns can
    alias (a step can cover more than half a lap), which is why they are
    left out of the consensus but still listed.
    """
    w = column_windings(loop, axis=axis)
    n = len(w)
    lo = int(np.ceil((1.0 - top_fraction) * (n - 1)))
    top = w[lo:]
    vals, counts = np.unique(top, return_counts=True)
    consensus = int(vals[np.argmax(counts)])
    return {"axis": axis,
            "consensus": consensus,
            "agreement": float(counts.max() / len(top)),
            "columns_used": int(len(top)),
            "windings": w.tolist()}


def classify_windings(loop, axes=None):
    """Tuple of consensus winding counts, one per wrapped model axis."""
    cone = loop.target.cone
    if axes is None:
        axes = range(len(cone.model.circumferences))
    return tuple(winding_report(loop, axis=ax)["consensus"] for ax in axes)
