"""Command-line front end: reproducible experiment runs with JSON reports.

An experiment spec is a JSON file naming ordered stages; each stage builds
an artifact or certifies a property, referencing artifacts produced by
earlier stages.  Reports are deterministic (seeded sampling, canonical
serialization); wall-clock timings go to a sibling file outside the
determinism contract.

Exit codes: 0 success, 2 refuted certification, 3 input error, 4 stuck lift.
"""
from __future__ import annotations

import json
import os
import sys
import time

import click
import numpy as np

from . import instances as inst
from . import reports
from .actions import (GroupElement, build_lift_certificate,
                      certify_scattered_fibres, certify_soft_quotient,
                      certify_uniform_coarse_discontinuity, min_displacement)
from .cones import (check_cat0_convexity, check_cone_inequalities,
                    circle_model, cone_descriptor, cone_from_descriptor,
                    line_model, metric_cone, plane_model, torus_model)
from .homotopies import (boundary_fix, boundary_fix_report, concatenate,
                         contraction_homotopy, lipschitz_scan)
from .lifting import (StuckLift, certified_region_ids, lift_homotopy,
                      uniqueness_defect, verify_lift, verify_ses_instance)
from .maps import CoarseMapData, Refuted
from .metric import (build_grid_space, ray_grid, space_from_descriptor,
                     space_to_descriptor)
from .oracle import classify_windings


class SpecError(Exception):
    """Experiment spec failed to parse or validate (exit code 3)."""


# ---------------------------------------------------------------------------
# stage handlers: (params, stage_dict, ctx) -> (result, artifact, csv_tables)


def _need(ctx, name, stage):
    try:
        return ctx["artifacts"][name]
    except KeyError:
        raise SpecError(f"stage {stage.get('id', stage['kind'])!r} references "
                        f"unknown artifact {name!r}")


def _seeded(params, ctx):
    return int(params.get("seed", ctx["seed"]))


def _tol(params, ctx, default):
    if "tolerance" in params:
        return float(params["tolerance"])
    if ctx["tolerance"] is not None:
        return float(ctx["tolerance"])
    return default


def _build_space(params, stage, ctx):
    kind = params.get("kind", "ray")
    if kind == "ray":
        sp = ray_grid(params["extent"], params["step"])
    elif kind == "grid":
        sp = build_grid_space(params.get("dim", 2), params["extent"],
                              params["step"])
    else:
        raise SpecError(f"unknown space kind {kind!r}")
    return ({"descriptor": space_to_descriptor(sp), "points": sp.n},
            sp, {"descriptor.json": reports.dumps(space_to_descriptor(sp))})


def _build_cone(params, stage, ctx):
    model_kind = params["model"]
    mesh = params["mesh"]
    if model_kind == "circle":
        model = circle_model(params["circumference"], mesh)
    elif model_kind == "torus":
        c = params.get("circumferences", [params.get("circumference", 1.0)] * 2)
        model = torus_model(c[0], c[1], mesh)
    elif model_kind == "line":
        model = line_model(params["extent"], mesh)
    elif model_kind == "plane":
        model = plane_model(params["extent"], mesh)
    else:
        raise SpecError(f"unknown cone model {model_kind!r}")
    cone = metric_cone(model, params["t_max"], params["t_step"])
    return ({"descriptor": cone_descriptor(cone), "vertices": cone.space.n,
             "columns": cone.ncol, "levels": cone.nlev}, cone,
            {"descriptor.json": reports.dumps(cone_descriptor(cone))})


def _build_cover(params, stage, ctx):
    which = params.get("geometry", "circle")
    if which == "circle":
        cov = inst.circle_cover(
            up_circumference=params.get("up_circumference", 12.0),
            down_circumference=params.get("down_circumference", 1.0),
            mesh=params.get("mesh", 0.125),
            t_max=params.get("t_max", 16.0),
            t_step=params.get("t_step", 0.25))
    elif which == "torus":
        cov = inst.torus_cover(
            up_circumferences=tuple(params.get("up_circumferences", (6.0, 6.0))),
            down_circumferences=tuple(params.get("down_circumferences",
                                                 (1.0, 1.0))),
            mesh=params.get("mesh", 0.25),
            t_max=params.get("t_max", 9.0),
            t_step=params.get("t_step", 0.25))
    else:
        raise SpecError(f"unknown cover geometry {which!r}")
    return ({"geometry": which, "upstairs_vertices": cov.up.space.n,
             "downstairs_vertices": cov.down.space.n,
             "generators": list(cov.action.names)}, cov, {})


def _build_contraction_loop(params, stage, ctx):
    alpha, p = inst.contraction_loop(
        x_max=params.get("x_max", 36.0), step=params.get("step", 0.5),
        mesh=params.get("mesh", 1 / 64), t_step=params.get("t_step", 0.25),
        level_rate=params.get("level_rate", 1 / 8),
        extent=params.get("extent", 1.25))
    return ({"samples": alpha.cylinder.space.n,
             "columns": alpha.cylinder.base.n,
             "cone_vertices": alpha.target.n,
             "mesh": params.get("mesh", 1 / 64)}, (alpha, p), {})


def _certify_cone_inequalities(params, stage, ctx):
    cone = _need(ctx, stage["input"], stage)
    cert = check_cone_inequalities(cone, params.get("pairs", 10000),
                                   _tol(params, ctx, 0.10),
                                   seed=_seeded(params, ctx))
    worst = cert.parameters["worst_ratios"]
    csv = {"worst": reports.csv_text(["inequality", "worst_ratio"],
                                     sorted(worst.items()))}
    if cert.verdict == "refuted":
        raise Refuted("cone inequality exceeded tolerance",
                      witness=cert.witness, details=cert.parameters)
    return (cert, cert, csv)


def _certify_cat0(params, stage, ctx):
    extent = params.get("extent", 10.0)
    model = plane_model(extent, extent)     # only the sampling window matters
    cert = check_cat0_convexity(model, params.get("trials", 10000),
                                seed=_seeded(params, ctx),
                                tolerance=params.get("tolerance", 1e-9))
    if cert.verdict == "refuted":
        raise Refuted("convexity violated", witness=cert.witness,
                      details=cert.parameters)
    return (cert, cert, {})


def _certify_quotient(params, stage, ctx):
    cov = _need(ctx, stage["input"], stage)
    R_grid = [float(r) for r in params.get("R_grid", (1.0, 2.0, 4.0))]
    word_radius = params.get("word_radius")
    mesh = cov.down.model.mesh
    C = min_displacement(cov.action, word_radius)
    softness = certify_soft_quotient(cov.pi, R_grid, action=cov.action)
    down_adj = cov.down.space.csgraph() != 0

    per_R = []
    for R in R_grid:
        K = certify_uniform_coarse_discontinuity(cov.action, R, word_radius)
        members = K.members()
        levels = cov.up.levels[members % cov.up.nlev]
        max_level = float(levels.max()) if members.size else 0.0
        confined = max_level <= R + R / C + 1e-9

        K_sc = certify_scattered_fibres(cov.pi, R, action=cov.action)
        image = np.unique(cov.pi.assignment[members])
        hood = np.zeros(cov.down.space.n, dtype=bool)
        hood[image] = True
        hood |= np.asarray(down_adj[image].sum(axis=0)).ravel() > 0
        contained = bool(hood[K_sc.members()].all())

        S = softness.S_at(R)
        per_R.append({"R": R,
                      "discontinuity_radius": K.radius,
                      "max_level": max_level,
                      "level_bound": R + R / C,
                      "confined": bool(confined),
                      "scatter_radius": K_sc.radius,
                      "scatter_in_image_plus_one_step": contained,
                      "S": S, "softness_bound": R + 2 * mesh,
                      "softness_ok": bool(S <= R + 2 * mesh + 1e-9)})
    all_ok = all(r["confined"] and r["scatter_in_image_plus_one_step"]
                 and r["softness_ok"] for r in per_R)
    result = {"min_displacement": C, "mesh": mesh, "per_R": per_R,
              "softness": softness, "verdict": "certified" if all_ok
              else "refuted"}
    csv = {"softness": reports.softness_csv(softness)}
    if not all_ok:
        bad = next(r for r in per_R
                   if not (r["confined"] and r["scatter_in_image_plus_one_step"]
                           and r["softness_ok"]))
        raise Refuted("quotient certification bound failed", witness=bad,
                      details=result)
    return (result, {"softness": softness, "C": C}, csv)


def _certify_lift_certificate(params, stage, ctx):
    cov = _need(ctx, stage["input"], stage)
    R_grid = [float(r) for r in params.get("R_grid", (1.0, 2.0, 4.0, 8.0))]
    cert = build_lift_certificate(cov.pi, R_grid, action=cov.action,
                                  word_radius=params.get("word_radius"))
    return (cert, cert, {"softness": reports.softness_csv(cert.softness),
                         "tables.json": reports.dumps(cert)})


def _certify_ratio_decrease(params, stage, ctx):
    def worst_of(sid):
        try:
            node = ctx["results"][sid]
        except KeyError:
            raise SpecError(f"ratio-decrease references unknown stage {sid!r}")
        for key in params.get("path", ["parameters", "worst_ratios"]):
            node = node[key]
        if "family" in params:
            node = node[params["family"]]
        return max(node.values()) if isinstance(node, dict) else float(node)

    coarse = worst_of(params["coarse"])
    fine = worst_of(params["fine"])
    strict = bool(params.get("strict", False))
    ok = fine < coarse - 1e-9 if strict else fine <= coarse + 1e-9
    result = {"coarse_worst": coarse, "fine_worst": fine, "strict": strict,
              "verdict": "certified" if ok else "refuted"}
    if "family" in params:
        result["family"] = params["family"]
    if not ok:
        raise Refuted("worst ratio did not decrease under refinement",
                      witness=result)
    return (result, result, {})


def _parse_winding(w):
    return tuple(w) if isinstance(w, (list, tuple)) else (int(w),)


def _lift_winding(params, stage, ctx):
    cov = _need(ctx, stage["input"], stage)
    cert = _need(ctx, params["cert"], stage)
    winding = params.get("winding", 1)
    loop = inst.winding_loop(cov, winding, x_max=params.get("x_max", 8.0))
    f = loop.as_homotopy()
    nb = loop.cylinder.base.n
    f0 = CoarseMapData(loop.cylinder.base, cov.up.space,
                       cov.b_prime.assignment[:nb])
    ties = params.get("tie_breaks", ["nearest-smallest", "nearest-largest"])
    lifts = [lift_homotopy(cov.pi, cert, f, f0, tie_break=t) for t in ties]
    rep = verify_lift(cov.pi, f, lifts[0], f0, cert=cert)
    if rep.verdict != "certified":
        raise Refuted("lift verification failed", witness=rep.witness,
                      details=rep.parameters)
    stages = rep.parameters["stages"]
    result = {"winding": list(_parse_winding(winding)),
              "tie_breaks": list(ties), "verify": stages,
              "T": lifts[0].meta["T"], "rho_delta": lifts[0].meta["rho_delta"]}
    if len(lifts) > 1:
        region = certified_region_ids(f, cert, stages["profile"]["S"],
                                      lifts[0].meta["T"])
        dis = np.flatnonzero(lifts[0].assignment != lifts[1].assignment)
        inside = bool(np.isin(dis, region).all())
        defect = uniqueness_defect(lifts[0], lifts[1], pi=cov.pi, f=f)
        result["disagreements"] = int(dis.size)
        result["disagreements_inside_region"] = inside
        result["defect"] = {"empty": defect.is_empty,
                            "center": int(defect.center),
                            "radius": float(defect.radius)}
        if not inside:
            raise Refuted("tie-break variants disagree outside the "
                          "certified region",
                          witness={"first_disagreement": int(dis[0])})
    cyl = loop.cylinder
    bx = cyl.base.coords[cyl.point_base, 0]
    csv = {"lift": reports.csv_text(
        ["x", "t", "target_point"],
        [(float(a), float(b), int(v))
         for a, b, v in zip(bx, cyl.point_t, lifts[0].assignment)])}
    return (result, lifts[0], csv)


def _correspond_windings(params, stage, ctx):
    cov = _need(ctx, stage["input"], stage)
    cert = _need(ctx, params["cert"], stage)
    windings = [_parse_winding(w) for w in params.get("windings", [1])]
    x_max = params.get("x_max", 8.0)
    horizon = params.get("horizon", 8.0)
    loops = {}
    for w in windings:
        value = w[0] if len(w) == 1 else w
        label = f"w{value}" if len(w) == 1 else "w({},{})".format(*w)
        loops[label] = (inst.winding_loop(cov, value, x_max=x_max),
                        GroupElement(w))
    if params.get("kernel_concat") and len(windings[0]) == 1:
        plus = next((l for l, (lp, g) in loops.items() if g.vector == (1,)),
                    None)
        minus = next((l for l, (lp, g) in loops.items() if g.vector == (-1,)),
                     None)
        if plus and minus:
            loops["w1*w-1"] = (concatenate(loops[plus][0], loops[minus][0]),
                               GroupElement((0,)))
    rep = verify_ses_instance(cov.action, cov.pi, cert, cov.b_prime, loops,
                              horizon=horizon,
                              homomorphism_pairs=params.get("homomorphism",
                                                            True))
    mism = [l for l, e in rep["loops"].items()
            if not e.get("matches_expected", True)]
    hom_ok = all(h["ok"] for h in rep["homomorphism"])
    kernel_ok = all(k["terminal_equals_base"]["equivalent"]
                    for k in rep["kernel"])
    oracle_rows = []
    oracle_ok = True
    for label, (loop, expected) in loops.items():
        if "*" in label:
            continue                       # concatenations are not snapped tracks
        w_oracle = classify_windings(loop)
        agree = list(w_oracle) == rep["loops"][label]["g"]
        oracle_ok &= agree
        oracle_rows.append((label, str(list(w_oracle)),
                            str(rep["loops"][label]["g"]), agree))
    result = {"loops": rep["loops"],
              "homomorphism_pairs": len(rep["homomorphism"]),
              "homomorphism_ok": hom_ok,
              "kernel": [{"loop": k["loop"],
                          "equivalent": k["terminal_equals_base"]["equivalent"]}
                         for k in rep["kernel"]],
              "kernel_ok": kernel_ok,
              "oracle_agrees": oracle_ok,
              "verdict": "certified" if not mism and hom_ok and kernel_ok
              and oracle_ok else "refuted"}
    csv = {"classifications": reports.csv_text(
        ["loop", "oracle", "classified", "agree"], sorted(oracle_rows))}
    if result["verdict"] == "refuted":
        raise Refuted("winding classification failed",
                      witness={"mismatched": mism, "homomorphism_ok": hom_ok,
                               "kernel_ok": kernel_ok,
                               "oracle_agrees": oracle_ok},
                      details=result)
    return (result, result, csv)


def _homotopy_contraction(params, stage, ctx):
    alpha, p = _need(ctx, stage["input"], stage)
    H, beta = contraction_homotopy(
        alpha, p, s_step=params.get("s_step"),
        sample_count=params.get("pairs", 1000),
        tolerance=_tol(params, ctx, 0.15),
        seed=_seeded(params, ctx))
    bounds = H.meta["bounds"]
    worst = bounds.parameters["worst_ratios"]
    result = {"worst_ratios": worst,
              "pairs": bounds.parameters["pairs"],
              "tolerance": bounds.parameters["tolerance"],
              "terminal_on_marked_column": True,
              "verdict": bounds.verdict}
    return (result, {"worst_ratios": worst, "homotopy": H},
            {"bounds": reports.bounds_csv(worst)})


def _homotopy_reparametrization(params, stage, ctx):
    rp = inst.reparametrization_instance(
        step=params.get("step", 0.5),
        value_step=params.get("value_step", 1 / 128),
        levels=params.get("levels", 6))
    cert = rp["certificate"]
    tolerance = _tol(params, ctx, 0.05)
    sup, witness = lipschitz_scan(rp["fg"], params.get("pairs", 4096),
                                  seed=_seeded(params, ctx))
    ok = cert.verdict == "certified" and sup <= 1.0 + tolerance
    result = {"knots_x": rp["reparametrization"].knots_x,
              "knots_y": rp["reparametrization"].knots_y,
              "worst_slope_product": cert.parameters["worst_product"],
              "composite_lipschitz_sup": sup,
              "tolerance": tolerance,
              "verdict": "certified" if ok else "refuted"}
    csv = {"segments": reports.csv_text(
        ["from", "to", "slope", "lipschitz_cap", "product"],
        [(r["from"], r["to"], r["slope"], r["lipschitz_cap"], r["product"])
         for r in cert.parameters["segments"]])}
    if not ok:
        raise Refuted("composite is not 1-Lipschitz within tolerance",
                      witness={"sup": sup, "pair": witness}, details=result)
    return (result, rp, csv)


def _homotopy_boundary_fix(params, stage, ctx):
    H = inst.boundary_fix_instance(
        x_max=params.get("x_max", 12.0), step=params.get("step", 0.5),
        value_step=params.get("value_step", 0.25))
    fixed = boundary_fix(H)
    audit = boundary_fix_report(H, fixed)
    ok = (audit["seams_exact"] and audit["boundary_constant_in_s"]
          and audit["boundary_value_is_b"])
    result = dict(audit, verdict="certified" if ok else "refuted")
    csv = {"homotopy": reports.homotopy_csv(fixed)}
    if not ok:
        raise Refuted("boundary fix audit failed", witness=audit)
    return (result, fixed, csv)


HANDLERS = {
    ("build", "space"): _build_space,
    ("build", "cone"): _build_cone,
    ("build", "cover"): _build_cover,
    ("build", "contraction-loop"): _build_contraction_loop,
    ("certify", "cone-inequalities"): _certify_cone_inequalities,
    ("certify", "cat0-convexity"): _certify_cat0,
    ("certify", "quotient"): _certify_quotient,
    ("certify", "lift-certificate"): _certify_lift_certificate,
    ("certify", "ratio-decrease"): _certify_ratio_decrease,
    ("lift", "winding-lift"): _lift_winding,
    ("correspond", "winding-classify"): _correspond_windings,
    ("homotopy", "contraction"): _homotopy_contraction,
    ("homotopy", "reparametrization"): _homotopy_reparametrization,
    ("homotopy", "boundary-fix"): _homotopy_boundary_fix,
}


# ---------------------------------------------------------------------------
# the experiment engine


def run_experiment(spec, out_dir, seed=None, tolerance=None, threads=None):
    """Execute the stages of ``spec`` and write report + side files.

    Returns the report dict.  Raises Refuted / StuckLift / SpecError; a
    partial report naming the failed stage is written before raising.
    """
    if not isinstance(spec, dict) or "name" not in spec \
            or not isinstance(spec.get("stages"), list):
        raise SpecError("spec must be an object with 'name' and 'stages'")
    eff_seed = int(spec.get("seed", 0) if seed is None else seed)
    ctx = {"artifacts": {}, "results": {}, "seed": eff_seed,
           "tolerance": tolerance}
    report = {"name": spec["name"], "seed": eff_seed,
              "tolerance": tolerance, "toolkit_version": reports.VERSION,
              "spec": spec, "stages": []}
    timings = {"threads": threads or 1, "stages": {}}
    os.makedirs(out_dir, exist_ok=True)

    def flush(failed=None):
        if failed is not None:
            report["failed_stage"] = failed
        reports.write_json(os.path.join(out_dir, "report.json"), report)
        timings["total_seconds"] = sum(timings["stages"].values())
        reports.write_json(os.path.join(out_dir, "report.timings.json"),
                           timings)

    for idx, stage in enumerate(spec["stages"]):
        if not isinstance(stage, dict) or "stage" not in stage \
                or "kind" not in stage:
            raise SpecError(f"stage #{idx} needs 'stage' and 'kind' fields")
        key = (stage["stage"], stage["kind"])
        if key not in HANDLERS:
            raise SpecError(f"unknown stage {key[0]}/{key[1]}")
        sid = stage.get("id", f"{stage['kind']}-{idx}")
        if sid in ctx["artifacts"]:
            raise SpecError(f"duplicate stage id {sid!r}")
        t0 = time.perf_counter()
        entry = {"id": sid, "stage": stage["stage"], "kind": stage["kind"],
                 "params": stage.get("params", {})}
        try:
            result, artifact, csvs = HANDLERS[key](stage.get("params", {}),
                                                   stage, ctx)
        except Refuted as exc:
            timings["stages"][sid] = time.perf_counter() - t0
            entry["result"] = {"verdict": "refuted", "message": str(exc),
                               "witness": reports.canonical(exc.witness)}
            report["stages"].append(entry)
            if stage.get("expect_refute"):
                ctx["results"][sid] = entry["result"]
                continue
            flush(failed=sid)
            raise
        except StuckLift:
            timings["stages"][sid] = time.perf_counter() - t0
            entry["result"] = {"verdict": "stuck"}
            report["stages"].append(entry)
            flush(failed=sid)
            raise
        timings["stages"][sid] = time.perf_counter() - t0
        if stage.get("expect_refute"):
            flush(failed=sid)
            raise SpecError(f"stage {sid!r} was expected to refute but "
                            "certified")
        entry["result"] = reports.canonical(result)
        side = []
        for label, text in csvs.items():
            fname = f"{sid}.{label}" if label.endswith(".json") \
                else f"{sid}.{label}.csv"
            reports.write_text_atomic(os.path.join(out_dir, fname), text)
            side.append(fname)
        if side:
            entry["files"] = sorted(side)
        report["stages"].append(entry)
        ctx["artifacts"][sid] = artifact
        ctx["results"][sid] = entry["result"]
    flush()
    return report


def load_spec(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc}")
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec parse error at line {exc.lineno} "
                        f"column {exc.colno}: {exc.msg}")


def bundled_spec_path(name):
    return os.path.join(os.path.dirname(__file__), "specs", name + ".json")


# ---------------------------------------------------------------------------
# click wiring


@click.group()
@click.option("--out", default="coarsekit-out", show_default=True,
              help="Directory for reports and CSV side files.")
@click.option("--seed", type=int, default=None,
              help="Override the sampling seed (default: spec's, else 0).")
@click.option("--threads", type=int, default=None, envvar="COARSEKIT_THREADS",
              help="Accepted for compatibility; computation is vectorized "
                   "single-threaded so results never depend on it.")
@click.option("--tolerance", type=float, default=None,
              help="Override the default tolerance of checks that take one.")
@click.pass_context
def cli(ctx, out, seed, threads, tolerance):
    """Coarse-geometry toolkit: cones, quotients, lifts, homotopies."""
    ctx.obj = {"out": out, "seed": seed, "threads": threads,
               "tolerance": tolerance}


def _run(ctx, spec):
    cfg = ctx.obj
    report = run_experiment(spec, cfg["out"], seed=cfg["seed"],
                            tolerance=cfg["tolerance"],
                            threads=cfg["threads"])
    click.echo(f"{report['name']}: {len(report['stages'])} stages -> "
               f"{os.path.join(cfg['out'], 'report.json')}")
    return report


@cli.command("run")
@click.option("--spec", "spec_path", required=True,
              type=click.Path(), help="Experiment spec (JSON).")
@click.pass_context
def run_cmd(ctx, spec_path):
    """Run an experiment spec and write its report."""
    if not os.path.exists(spec_path):
        bundled = bundled_spec_path(spec_path)
        if os.path.exists(bundled):
            spec_path = bundled
        else:
            raise SpecError(f"spec file not found: {spec_path}")
    _run(ctx, load_spec(spec_path))


@cli.command("build-space")
@click.option("--kind", type=click.Choice(["ray", "grid"]), default="ray",
              show_default=True)
@click.option("--extent", type=float, required=True)
@click.option("--step", type=float, required=True)
@click.option("--dim", type=int, default=2, show_default=True)
@click.pass_context
def build_space_cmd(ctx, kind, extent, step, dim):
    """Build a grid model and write its descriptor."""
    _run(ctx, {"name": f"build-space-{kind}", "stages": [
        {"stage": "build", "kind": "space", "id": "space",
         "params": {"kind": kind, "extent": extent, "step": step,
                    "dim": dim}}]})


@cli.command("cone")
@click.option("--model", type=click.Choice(["circle", "torus", "line",
                                            "plane"]), required=True)
@click.option("--circumference", type=float, default=1.0, show_default=True)
@click.option("--extent", type=float, default=1.0, show_default=True)
@click.option("--mesh", type=float, required=True)
@click.option("--t-max", type=float, required=True)
@click.option("--t-step", type=float, required=True)
@click.pass_context
def cone_cmd(ctx, model, circumference, extent, mesh, t_max, t_step):
    """Build a metric cone over a model and write its descriptor."""
    params = {"model": model, "mesh": mesh, "t_max": t_max, "t_step": t_step,
              "circumference": circumference, "extent": extent}
    if model == "torus":
        params["circumferences"] = [circumference, circumference]
    _run(ctx, {"name": f"cone-{model}", "stages": [
        {"stage": "build", "kind": "cone", "id": "cone", "params": params}]})


@cli.command("quotient")
@click.option("--cover", type=click.Choice(["circle", "torus"]),
              default="circle", show_default=True)
@click.option("--r-grid", default="1,2,4", show_default=True,
              help="Comma-separated radii.")
@click.pass_context
def quotient_cmd(ctx, cover, r_grid):
    """Certify displacement, discontinuity, scatter, and softness."""
    radii = [float(r) for r in r_grid.split(",")]
    _run(ctx, {"name": f"quotient-{cover}", "stages": [
        {"stage": "build", "kind": "cover", "id": "cov",
         "params": {"geometry": cover}},
        {"stage": "certify", "kind": "quotient", "id": "quotient",
         "input": "cov", "params": {"R_grid": radii}}]})


@cli.command("certify")
@click.option("--what", type=click.Choice(["cone-inequalities",
                                           "cat0-convexity"]), required=True)
@click.option("--pairs", type=int, default=10000, show_default=True)
@click.option("--mesh", type=float, default=0.25, show_default=True)
@click.pass_context
def certify_cmd(ctx, what, pairs, mesh):
    """Run a stand-alone certification scan."""
    if what == "cone-inequalities":
        stages = [
            {"stage": "build", "kind": "cone", "id": "cone",
             "params": {"model": "circle", "circumference": 1.0,
                        "mesh": mesh, "t_max": 16.0, "t_step": 0.25}},
            {"stage": "certify", "kind": "cone-inequalities", "id": "ineq",
             "input": "cone", "params": {"pairs": pairs}}]
    else:
        stages = [{"stage": "certify", "kind": "cat0-convexity", "id": "cat0",
                   "params": {"trials": pairs}}]
    _run(ctx, {"name": what, "stages": stages})


@cli.command("lift")
@click.option("--cover", type=click.Choice(["circle", "torus"]),
              default="circle", show_default=True)
@click.option("--winding", default="1", show_default=True,
              help="Integer (circle) or a:b pair (torus).")
@click.option("--x-max", type=float, default=13.0, show_default=True)
@click.option("--r-grid", default="1,2,4,8,12", show_default=True)
@click.pass_context
def lift_cmd(ctx, cover, winding, x_max, r_grid):
    """Lift a winding loop and verify the lift stage by stage."""
    w = [int(v) for v in winding.split(":")]
    radii = [float(r) for r in r_grid.split(",")]
    _run(ctx, {"name": f"lift-{cover}-w{winding}", "stages": [
        {"stage": "build", "kind": "cover", "id": "cov",
         "params": {"geometry": cover}},
        {"stage": "certify", "kind": "lift-certificate", "id": "cert",
         "input": "cov", "params": {"R_grid": radii}},
        {"stage": "lift", "kind": "winding-lift", "id": "lift",
         "input": "cov",
         "params": {"cert": "cert", "winding": w[0] if len(w) == 1 else w,
                    "x_max": x_max}}]})


@cli.command("correspond")
@click.option("--cover", type=click.Choice(["circle", "torus"]),
              default="circle", show_default=True)
@click.option("--windings", default="-2,-1,0,1,2", show_default=True,
              help="Comma-separated; a:b pairs for the torus.")
@click.option("--x-max", type=float, default=8.0, show_default=True)
@click.option("--horizon", type=float, default=8.0, show_default=True)
@click.option("--pairs/--no-pairs", "homomorphism", default=True,
              show_default=True, help="Check the homomorphism property.")
@click.pass_context
def correspond_cmd(ctx, cover, windings, x_max, horizon, homomorphism):
    """Classify winding loops through the lifting correspondence."""
    ws = []
    for tok in windings.split(","):
        v = [int(x) for x in tok.split(":")]
        ws.append(v[0] if len(v) == 1 else v)
    grid = [1.0, 2.0, 4.0] if cover == "torus" else [1.0, 2.0, 4.0, 8.0]
    _run(ctx, {"name": f"correspond-{cover}", "stages": [
        {"stage": "build", "kind": "cover", "id": "cov",
         "params": {"geometry": cover}},
        {"stage": "certify", "kind": "lift-certificate", "id": "cert",
         "input": "cov", "params": {"R_grid": grid}},
        {"stage": "correspond", "kind": "winding-classify", "id": "classify",
         "input": "cov",
         "params": {"cert": "cert", "windings": ws, "x_max": x_max,
                    "horizon": horizon, "homomorphism": homomorphism,
                    "kernel_concat": cover == "circle"}}]})


@cli.command("homotopy")
@click.option("--check", type=click.Choice(["contraction",
                                            "reparametrization",
                                            "boundary-fix"]), required=True)
@click.option("--mesh", type=float, default=1 / 64)
@click.option("--pairs", type=int, default=1000, show_default=True)
@click.pass_context
def homotopy_cmd(ctx, check, mesh, pairs):
    """Build one of the named homotopies and audit its guarantees."""
    if check == "contraction":
        stages = [
            {"stage": "build", "kind": "contraction-loop", "id": "loop",
             "params": {"mesh": mesh}},
            {"stage": "homotopy", "kind": "contraction", "id": "contraction",
             "input": "loop", "params": {"s_step": 0.5, "pairs": pairs}}]
    elif check == "reparametrization":
        stages = [{"stage": "homotopy", "kind": "reparametrization",
                   "id": "repar", "params": {}}]
    else:
        stages = [{"stage": "homotopy", "kind": "boundary-fix",
                   "id": "boundary", "params": {}}]
    _run(ctx, {"name": f"homotopy-{check}", "stages": stages})


@cli.command("describe")
@click.argument("path", type=click.Path(exists=True))
def describe_cmd(path):
    """Summarize a report, certificate, or artifact descriptor."""
    if path.endswith(".csv"):
        with open(path) as fh:
            lines = fh.read().splitlines()
        click.echo(f"{path}: CSV, columns [{lines[0]}], {len(lines) - 1} rows")
        return
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: parse error at line {exc.lineno}: "
                            f"{exc.msg}")
    if "stages" in data and "name" in data:
        click.echo(f"run {data['name']!r} (seed {data.get('seed')}, "
                   f"toolkit {data.get('toolkit_version')})")
        for st in data["stages"]:
            result = st.get("result", {})
            verdict = result.get("verdict", "ok") \
                if isinstance(result, dict) else "ok"
            click.echo(f"  {st['id']}: {st['stage']}/{st['kind']} "
                       f"-> {verdict}")
        if "failed_stage" in data:
            click.echo(f"  FAILED at {data['failed_stage']}")
    elif "softness" in data:
        click.echo("lift certificate")
        for row in data["softness"]:
            click.echo(f"  S({row['R']:g}) = {row['S']:g}")
        for key in ("scatter", "discontinuity"):
            for row in data.get(key, []):
                click.echo(f"  {key} K({row['R']:g}): radius "
                           f"{row['radius']:g}"
                           + (" (empty)" if row.get("empty") else ""))
    elif "t_max" in data:
        cone = cone_from_descriptor(data)
        click.echo(f"cone over {data['model']} (mesh {data['mesh']:g}), "
                   f"levels 1..{data['t_max']:g} step {data['t_step']:g}: "
                   f"{cone.space.n} points "
                   f"({cone.ncol} columns x {cone.nlev} levels)")
    elif "kind" in data:
        sp = space_from_descriptor(data)
        if sp.kind == "grid" or sp.n <= 2048:
            diam = max(sp.eccentricity(a) for a in
                       ([sp.basepoint] if sp.kind == "grid"
                        else range(sp.n)))
            click.echo(f"space kind {data['kind']!r}: {sp.n} points, "
                       f"diameter {diam:g}")
        else:
            click.echo(f"space kind {data['kind']!r}: {sp.n} points, "
                       f"basepoint eccentricity {sp.eccentricity():g}")
    else:
        click.echo(f"{path}: JSON object with keys {sorted(data)[:8]}")


def main(argv=None):
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 3
    except click.Abort:
        click.echo("aborted", err=True)
        return 130
    except SpecError as exc:
        click.echo(f"input error: {exc}", err=True)
        return 3
    except Refuted as exc:
        click.echo(f"refuted: {exc}", err=True)
        if exc.witness is not None:
            click.echo(f"witness: {json.dumps(reports.canonical(exc.witness), sort_keys=True)}",
                       err=True)
        return 2
    except StuckLift as exc:
        click.echo(f"stuck lift: {exc}", err=True)
        return 4
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"input error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
