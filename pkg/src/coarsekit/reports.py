"""Deterministic report files: canonical JSON, CSV side tables, atomic writes.

Reports must be byte-identical across reruns of the same experiment, so
every float is rounded to 12 significant digits at serialization time, keys
are sorted, and files land via os.replace.  Wall-clock numbers never go in
the report itself; they live in a sibling ``<name>.timings.json`` that is
explicitly outside the determinism contract.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

VERSION = "0.1.0"


def round_sig(x):
    """Round to 12 significant digits; the only float formatting used."""
    if x != x or x in (float("inf"), float("-inf")):
        return repr(x)
    return float(f"{x:.12g}")


def canonical(obj):
    """Recursively convert to JSON-safe values with rounded floats.

    Handles numpy scalars/arrays and the toolkit's result objects
    (Certification, ControlProfile, SoftnessTable, LiftCertificate,
    BoundedSet, GroupElement) by flattening them to plain dicts.
    """
    from .actions import GroupElement, LiftCertificate, SoftnessTable
    from .maps import Certification, ControlProfile
    from .metric import BoundedSet

    if isinstance(obj, Certification):
        return canonical({"verdict": obj.verdict, "witness": obj.witness,
                          "parameters": obj.parameters, "notes": list(obj.notes)})
    if isinstance(obj, ControlProfile):
        return canonical({"rows": obj.rows(), "exhaustive": obj.exhaustive})
    if isinstance(obj, SoftnessTable):
        return canonical({"rows": obj.rows(), "provenance": obj.provenance})
    if isinstance(obj, LiftCertificate):
        return canonical(obj.tables_json())
    if isinstance(obj, BoundedSet):
        return canonical({"center": obj.center, "radius": obj.radius,
                          "empty": obj.is_empty})
    if isinstance(obj, GroupElement):
        return canonical(list(obj.vector))
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return round_sig(float(obj))
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj):
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(canonical(obj), sort_keys=True, indent=2,
                      ensure_ascii=True) + "\n"


def write_text_atomic(path, text):
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    write_text_atomic(path, dumps(obj))


def csv_text(header, rows):
    """CSV with '.' decimals; floats at 12 significant digits."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.12g}"
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    write_text_atomic(path, csv_text(header, rows))


# ---------------------------------------------------------------------------
# domain-specific tables


def softness_csv(table):
    return csv_text(["R", "S"], [(r["R"], r["S"]) for r in table.rows()])


def bounds_csv(worst_ratios):
    return csv_text(["family", "worst_ratio"],
                    sorted((k, v) for k, v in worst_ratios.items()))


def homotopy_csv(H):
    """One 'x,t,s,target_point' row per grid sample of a homotopy.

    The homotopy's cylinder base must carry planar coordinates (x, t); the
    slide coordinate s is the cylinder's own column parameter.
    """
    cyl = H.cylinder
    base_xy = cyl.base.coords
    if base_xy.shape[1] != 2:
        raise ValueError("homotopy base has no (x, t) coordinates to dump")
    i = cyl.point_base
    s = cyl.point_t
    rows = zip(base_xy[i, 0], base_xy[i, 1], s, H.assignment)
    return csv_text(["x", "t", "s", "target_point"],
                    [(float(a), float(b), float(c), int(v))
                     for a, b, c, v in rows])


def ray_csv(ray):
    return csv_text(["t", "target_point"],
                    [(float(t), int(v))
                     for t, v in zip(ray.t_values(), ray.assignment)])
