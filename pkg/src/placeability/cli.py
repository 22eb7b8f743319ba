"""Command-line entry point.

Subcommands::

    score-placements  score sampled placements of an object cloud in a region (JSON)
    sweep-edge        push a synthetic object over a table edge (CSV)
    sweep-incline     tilt the support under a synthetic object (CSV)
    heuristic-map     packing heuristic over a grid of positions (CSV)
    unify             full grasp-place reasoning on a scene (JSON)
    bench             pipeline stage timings for several grasp counts (CSV)
    export-scene      write a bundled scene (and its grasp sets) to a directory

Every command accepts ``--config FILE`` and repeated ``--set key=value``;
the effective configuration and seed are embedded in each output.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig
from .errors import NoFeasiblePair, PlaceabilityError
from .geometry import PointCloud, TriMesh
from .io import load_grasps, load_mesh, load_point_cloud, write_grasps
from .oracle import (
    SyntheticObject,
    cylinder,
    edge_sweep,
    incline_sweep,
    l_shape,
    offset_mass_box,
    synthesize_partial_cloud,
    uniform_box,
    viewpoints_around,
)
from .pipeline import STAGES, ReasoningParams, SceneDescription, dumps, run_unified_reasoning
from .placement import (
    ObjectModel,
    TargetRegion,
    filter_colliding_placements,
    nearest_object_clearance,
    packing_heuristic,
    posed_hull,
    rest_on_surface,
    sample_placement_poses,
)
from .scenes import GRASP_SETS, SCENES, build_scene, load_scene, save_scene
from .stability import evaluate_placement_stability


def _fmt(x) -> str:
    return format(float(x), ".9g")


def reasoning_params(cfg: RunConfig) -> ReasoningParams:
    return ReasoningParams(
        stability=cfg.stability(),
        altitude=cfg.altitude(),
        heuristic=cfg.heuristic(),
        weights=cfg.weights(),
        gripper=cfg.gripper(),
        reachability=cfg.reachability(),
        collision_margin=cfg["collision.margin"],
        placement_margin=cfg["placement.margin"],
        support_allowance=cfg["placement.support_allowance"],
    )


def _config(args) -> RunConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise PlaceabilityError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return RunConfig.load(args.config, overrides)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _config_footer(cfg: RunConfig) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in cfg.echo().items())


def _region(args) -> TargetRegion:
    objects = tuple(load_mesh(p) for p in (args.objects or []))
    env = load_mesh(args.env) if args.env else None
    return TargetRegion(load_mesh(args.support), env, objects)


# ---------------------------------------------------------------------------
# score-placements
# ---------------------------------------------------------------------------


def cmd_score_placements(args, cfg: RunConfig) -> str:
    region = _region(args)
    obj = ObjectModel.from_cloud(load_point_cloud(args.cloud))
    seed = cfg["seed"]
    n = args.placements or cfg["pipeline.n_placements"]
    cands = sample_placement_poses(region, obj, n, seed, orientations=not args.observed_only)
    hull = obj.local_hull()
    kept = filter_colliding_placements(cands, hull, region, cfg["placement.margin"],
                                       cfg["placement.support_allowance"])
    heur = cfg.heuristic()
    local = obj.local_cloud()
    rows = []
    for j, c in enumerate(kept):
        res = evaluate_placement_stability(local, c.pose, cfg.stability(), seed=seed + j,
                                           support_normal=c.normal,
                                           support_region=region.footprint(c.face) if c.face >= 0 else None)
        clearance = nearest_object_clearance(posed_hull(hull, c), region)
        f_h = 1.0 if heur is None else packing_heuristic(clearance, heur)
        rows.append({
            "index": j,
            "label": c.label,
            "pose": c.pose.matrix,
            "surface_point": c.surface_point,
            "normal": c.normal,
            "f_st": res.score,
            "inlier_fraction": res.inlier_fraction,
            "support_degenerate": res.degenerate,
            "clearance": clearance,
            "f_h": f_h,
            "aggregate": res.score * f_h,
        })
    out = {
        "seed": seed,
        "config": cfg.echo(),
        "diagnostics": {"sampled": len(cands), "eliminated_collision": len(cands) - len(kept),
                        "retained": len(kept)},
        "candidates": rows,
    }
    return dumps(out)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def synthetic_object(args) -> SyntheticObject:
    kind = args.object
    if kind == "box":
        return uniform_box(args.size or (0.1, 0.1, 0.2))
    if kind == "cylinder":
        return cylinder(args.radius, args.height)
    if kind == "offset-mass":
        return offset_mass_box()
    if kind == "l-shape":
        return l_shape()
    raise PlaceabilityError(f"unknown object {kind!r}")


def object_cloud(obj: SyntheticObject, cfg: RunConfig, seed: int) -> PointCloud:
    views = cfg["sweep.views"]
    if views <= 0:
        return obj.dense_cloud(cfg["sweep.points"], cfg["sweep.noise"], seed)
    target = obj.com
    vps = viewpoints_around(target, views, seed)
    cloud, _ = synthesize_partial_cloud(obj.mesh, vps, cfg["sweep.noise"], seed, cfg["sweep.points"])
    return cloud


def cmd_sweep_edge(args, cfg: RunConfig) -> str:
    obj = synthetic_object(args)
    seed = cfg["seed"]
    res = edge_sweep(obj, object_cloud(obj, cfg, seed), cfg["sweep.steps"], cfg.stability(), args.direction, seed)
    return res.to_csv() + _config_footer(cfg)


def cmd_sweep_incline(args, cfg: RunConfig) -> str:
    obj = synthetic_object(args)
    seed = cfg["seed"]
    angles = np.linspace(0.0, cfg["sweep.angle_max"], cfg["sweep.angle_steps"])
    res = incline_sweep(obj, object_cloud(obj, cfg, seed), angles, cfg.stability(), args.direction, seed)
    return res.to_csv() + _config_footer(cfg)


# ---------------------------------------------------------------------------
# heuristic-map
# ---------------------------------------------------------------------------


def _surface_height(support: TriMesh, xy):
    """Height and normal of the support under ``xy`` (None if outside)."""
    tri = support.triangles
    a, b, c = tri[:, 0, :2], tri[:, 1, :2], tri[:, 2, :2]
    v0, v1, v2 = b - a, c - a, xy - a
    den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
    ok = np.abs(den) > 1e-15
    den = np.where(ok, den, 1.0)
    u = (v2[:, 0] * v1[:, 1] - v1[:, 0] * v2[:, 1]) / den
    v = (v0[:, 0] * v2[:, 1] - v2[:, 0] * v0[:, 1]) / den
    inside = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12)
    if not inside.any():
        return None
    k = int(np.flatnonzero(inside)[0])
    z = tri[k, 0, 2] + u[k] * (tri[k, 1, 2] - tri[k, 0, 2]) + v[k] * (tri[k, 2, 2] - tri[k, 0, 2])
    return np.array([xy[0], xy[1], z]), support.face_normals[k]


def cmd_heuristic_map(args, cfg: RunConfig) -> str:
    region = _region(args)
    obj = ObjectModel.from_cloud(load_point_cloud(args.cloud))
    params = cfg.heuristic()
    if args.mode:
        from .placement import PackingHeuristicParams

        base = params or PackingHeuristicParams(cfg["heuristic.tau"], cfg["heuristic.k"], cfg["heuristic.margin"])
        params = PackingHeuristicParams(base.tau, base.k, base.margin, args.mode)
    if params is None:
        raise PlaceabilityError("heuristic-map needs a mode: pass --mode or set heuristic.mode")
    hull = obj.local_hull()
    local = obj.local_cloud().points
    lo, hi = region.support.bounds()
    step = args.resolution
    xs = np.arange(lo[0] + step / 2, hi[0], step)
    ys = np.arange(lo[1] + step / 2, hi[1], step)
    buf = io.StringIO()
    buf.write("x,y,clearance,f_h\n")
    for y in ys:
        for x in xs:
            hit = _surface_height(region.support, np.array([x, y]))
            if hit is None:
                continue
            p, nrm = hit
            pose = rest_on_surface(local, obj.pose.rotation, p, nrm)
            d = nearest_object_clearance(hull.transformed(pose), region)
            buf.write(f"{_fmt(x)},{_fmt(y)},{_fmt(d)},{_fmt(packing_heuristic(d, params))}\n")
    buf.write(f"# mode={params.mode}\n")
    return buf.getvalue() + _config_footer(cfg)


# ---------------------------------------------------------------------------
# unify / bench / export-scene
# ---------------------------------------------------------------------------


def _scene(args) -> SceneDescription:
    if args.scene_dir:
        return load_scene(args.scene_dir)
    return build_scene(args.scene)


def _grasps(args, scene: SceneDescription, cfg: RunConfig):
    if getattr(args, "grasps", None):
        return load_grasps(args.grasps, cfg["gripper.max_opening"])
    if getattr(args, "grasp_set", None):
        return GRASP_SETS[args.grasp_set](scene)
    return None


def cmd_unify(args, cfg: RunConfig) -> str:
    scene = _scene(args)
    report = run_unified_reasoning(
        scene, _grasps(args, scene, cfg), reasoning_params(cfg),
        cfg["pipeline.n_grasps"], cfg["pipeline.n_placements"], cfg["seed"],
    )
    out = report.to_dict(cfg["pipeline.top"], timing=args.timing, config=cfg.echo())
    out["scene"] = scene.name
    return dumps(out)


def cmd_bench(args, cfg: RunConfig) -> str:
    scene = build_scene(args.scene)
    params = reasoning_params(cfg)
    counts = [int(c) for c in args.counts.split(",")]
    buf = io.StringIO()
    buf.write("n_grasps,repeat,grasps_used,placements_used,"
              + ",".join(f"t_{s}" for s in STAGES) + ",t_total\n")
    for n in counts:
        for rep in range(args.repeats):
            t = time.perf_counter()
            r = run_unified_reasoning(scene, None, params, n, cfg["pipeline.n_placements"], cfg["seed"])
            total = time.perf_counter() - t
            vals = [r.timing[s] for s in STAGES] + [total]
            buf.write(f"{n},{rep},{len(r.grasps)},{len(r.placements)}," + ",".join(_fmt(v) for v in vals) + "\n")
    return buf.getvalue() + _config_footer(cfg)


def cmd_export_scene(args, cfg: RunConfig) -> str:
    scene = build_scene(args.scene, cfg["seed"])
    d = save_scene(scene, args.dir)
    written = sorted(p.name for p in d.iterdir())
    if args.scene == "shelf":
        for name, fn in GRASP_SETS.items():
            write_grasps(d / f"grasps_{name}.txt", fn(scene))
            written.append(f"grasps_{name}.txt")
    return "".join(f"{d / w}\n" for w in sorted(set(written)))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _vec3(text):
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    common.add_argument("--out", "-o", help="output file (default: stdout)")
    common.add_argument("--error-json", action="store_true", help="report errors as JSON on stdout")

    parser = argparse.ArgumentParser(prog="placeability", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def region_args(p):
        p.add_argument("--support", required=True, help="OBJ mesh of the support surfaces")
        p.add_argument("--env", help="OBJ mesh of all obstacles (defaults to the support)")
        p.add_argument("--objects", nargs="*", help="OBJ meshes of objects already in the region")

    p = sub.add_parser("score-placements", parents=[common], help="score placements of an observed object")
    p.add_argument("--cloud", required=True, help="object cloud (XYZ or ASCII PLY)")
    region_args(p)
    p.add_argument("--placements", "-n", type=int, help="surface samples (default: pipeline.n_placements)")
    p.add_argument("--observed-only", action="store_true", help="skip the five reorientations")
    p.set_defaults(func=cmd_score_placements)

    for name, fn in (("sweep-edge", cmd_sweep_edge), ("sweep-incline", cmd_sweep_incline)):
        p = sub.add_parser(name, parents=[common], help=f"{name.replace('-', ' ')} on a synthetic object")
        p.add_argument("--object", default="box", choices=["box", "cylinder", "offset-mass", "l-shape"])
        p.add_argument("--size", type=_vec3, help="box extents x,y,z (m)")
        p.add_argument("--radius", type=float, default=0.04)
        p.add_argument("--height", type=float, default=0.15)
        p.add_argument("--direction", type=int, default=1, choices=[1, -1], help="which side leads")
        p.set_defaults(func=fn)

    p = sub.add_parser("heuristic-map", parents=[common], help="packing heuristic over a position grid")
    p.add_argument("--cloud", required=True)
    region_args(p)
    p.add_argument("--mode", choices=["dense", "sparse"])
    p.add_argument("--resolution", type=float, default=0.02, help="grid spacing (m)")
    p.set_defaults(func=cmd_heuristic_map)

    p = sub.add_parser("unify", parents=[common], help="rank grasp-placement pairs for a scene")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scene", default="tabletop", choices=sorted(SCENES))
    g.add_argument("--scene-dir", help="directory written by export-scene")
    p.add_argument("--grasps", help="grasp file (14 numbers per line)")
    p.add_argument("--grasp-set", choices=sorted(GRASP_SETS), help="bundled shelf grasp set")
    p.add_argument("--timing", action="store_true", help="include stage timings (not reproducible)")
    p.set_defaults(func=cmd_unify)

    p = sub.add_parser("bench", parents=[common], help="stage timings for several grasp counts")
    p.add_argument("--scene", default="tabletop", choices=sorted(SCENES))
    p.add_argument("--counts", default="100,250,500")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-scene", parents=[common], help="write a bundled scene to files")
    p.add_argument("--scene", default="tabletop", choices=sorted(SCENES))
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_export_scene)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        _emit(args, args.func(args, cfg))
        return 0
    except (PlaceabilityError, OSError, ValueError) as exc:
        diagnostics = getattr(exc, "diagnostics", None)
        if args.error_json:
            payload = {"error": type(exc).__name__, "message": str(exc)}
            if diagnostics is not None:
                payload["diagnostics"] = diagnostics
            sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        else:
            msg = f"error: {exc}"
            if diagnostics:
                msg += " " + json.dumps(diagnostics, sort_keys=True)
            print(msg, file=sys.stderr)
        return 2 if isinstance(exc, NoFeasiblePair) else 1


if __name__ == "__main__":
    sys.exit(main())
