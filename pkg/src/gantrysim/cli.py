"""Command-line entry point: plan, simulate, segment, validate, stats."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, dataset, ioutil, routing, segmentation
from .camera import pose_from_dict
from .config import ToolkitConfig, load_config
from .scene import load_scene
from .simulate import simulate_run
from .spatial import Cuboid


def _load_waypoints(path: Path, default_volume: Cuboid) -> routing.WaypointSet:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "volume" in data:
        volume = Cuboid(
            tuple(float(v) for v in data["volume"]["min"]),
            tuple(float(v) for v in data["volume"]["max"]),
        )
    else:
        volume = default_volume
    return routing.WaypointSet(
        positions=tuple(tuple(float(v) for v in p) for p in data["positions"]),
        volume=volume,
    )


def _random_waypoints(n: int, seed: int, volume: Cuboid) -> routing.WaypointSet:
    rng = np.random.default_rng(seed)
    lo = np.asarray(volume.min_corner)
    hi = np.asarray(volume.max_corner)
    points = lo + rng.random((n, 3)) * (hi - lo)
    return routing.WaypointSet(
        positions=tuple(tuple(float(v) for v in p) for p in points),
        volume=volume,
    )


def _cost_dict(cost: routing.RouteCost) -> dict:
    return {"seconds": cost.seconds, "millimeters": cost.millimeters}


def cmd_plan(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.waypoints is not None:
        wset = _load_waypoints(args.waypoints, cfg.volume)
    else:
        wset = _random_waypoints(args.random, args.seed, cfg.volume)

    params = routing.ZigzagParams(
        slab_width=args.slab_width or cfg.zigzag.slab_width,
        column_width=args.column_width or cfg.zigzag.column_width,
    )
    zig = routing.plan_zigzag(wset, params)
    zig_cost = routing.route_cost(zig, wset, cfg.motion)
    nn = routing.nearest_neighbor_route(wset)
    nn_cost = routing.route_cost(nn, wset, cfg.motion)

    report = {
        "planner": "zigzag",
        "order": routing.route_to_json_dict(zig),
        "total_seconds": zig_cost.seconds,
        "total_millimeters": zig_cost.millimeters,
        "legs": [
            {"from": i, "to": j, "seconds": s, "millimeters": mm}
            for i, j, s, mm in zip(
                zig.order, zig.order[1:], zig_cost.leg_seconds, zig_cost.leg_millimeters
            )
        ],
        "comparison": {
            "zigzag": _cost_dict(zig_cost),
            "nearest_neighbor": {
                "order": routing.route_to_json_dict(nn),
                **_cost_dict(nn_cost),
            },
        },
    }
    if len(wset) <= routing.BRUTE_FORCE_MAX:
        brute = routing.brute_force_tsp(wset)
        report["comparison"]["brute_force"] = {
            "order": routing.route_to_json_dict(brute),
            **_cost_dict(routing.route_cost(brute, wset, cfg.motion)),
        }

    ioutil.write_json(args.out, report)
    print(f"planned {len(wset)} waypoints -> {args.out}")
    for name, entry in report["comparison"].items():
        print(
            f"  {name:17s} {entry['seconds']:10.3f} s  {entry['millimeters']:10.1f} mm"
        )
    return 0


def _ordered_poses(args, cfg: ToolkitConfig, poses: list) -> list:
    if args.order == "file":
        return poses
    wset = routing.WaypointSet(
        positions=tuple(p.position for p in poses), volume=cfg.volume
    )
    route = routing.plan_zigzag(wset, cfg.zigzag)
    return [poses[i] for i in route.order]


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    scene = load_scene(args.scene)
    with open(args.poses, encoding="utf-8") as fh:
        poses = [pose_from_dict(d, head_offset=cfg.head_offset) for d in json.load(fh)]
    poses = _ordered_poses(args, cfg, poses)

    scale = args.scale if args.scale is not None else cfg.render_scale
    legacy = args.legacy_origin or cfg.legacy_origin
    run = simulate_run(
        scene,
        poses,
        timing=cfg.timing,
        motion=cfg.motion,
        intrinsics=cfg.intrinsics,
        scale=scale,
        start_time=cfg.run.start_time,
    )
    summary = dataset.write_run(
        run,
        scene,
        args.out,
        volume=cfg.volume,
        room=cfg.run.room,
        institute=cfg.run.institute,
        camera_name=cfg.run.camera,
        lens=cfg.run.lens,
        legacy_origin=legacy,
        filename_ext=cfg.run.filename_ext,
        edge_margin=cfg.run.edge_margin,
    )
    errors = dataset.validate_run_directory(args.out, legacy_origin=legacy)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    print(
        f"simulated {summary.n_masters} masters, {summary.n_subimages} subimages "
        f"in {run.log.t_p:.1f} s of run time -> {summary.out_dir}"
    )
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    image = ioutil.read_image(args.image)
    if args.blur:
        image = segmentation.box_blur(image, args.blur)
    if args.background is not None:
        background = ioutil.read_image(args.background)
        mask = segmentation.background_subtract(image, background, args.tolerance)
    else:
        mask = segmentation.threshold_keyout(segmentation.b_channel(image), args.threshold)
    if args.dilate:
        mask = segmentation.dilate(mask, args.dilate)
    if args.fill_holes:
        mask = segmentation.fill_holes(mask)
    if args.erode:
        mask = segmentation.erode(mask, args.erode)

    ioutil.write_png(args.out, mask)
    stats = {
        "foreground_pixels": int(mask.sum()),
        "total_pixels": int(mask.size),
        "foreground_fraction": float(mask.sum() / mask.size),
    }
    if args.report is not None:
        ioutil.write_json(args.report, stats)
    print(
        f"mask -> {args.out}  foreground {stats['foreground_pixels']} px "
        f"({stats['foreground_fraction']:.4f})"
    )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    errors = dataset.validate_run_directory(args.path, legacy_origin=args.legacy_origin)
    if args.report is not None:
        ioutil.write_json(args.report, {"errors": errors, "count": len(errors)})
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    print(f"{len(errors)} validation error(s) in {args.path}")
    return 1 if errors else 0


def cmd_stats(args: argparse.Namespace) -> int:
    if args.run_log is not None:
        with open(args.run_log, encoding="utf-8") as fh:
            acc = analytics.RunAccounting.from_run_log_dict(json.load(fh), t_c=args.tc)
    else:
        missing = [
            name for name in ("tp", "td", "nm", "ns") if getattr(args, name) is None
        ]
        if missing:
            raise ValueError(
                "stats needs --run-log or all of --tp --td --nm --ns "
                f"(missing: {', '.join('--' + m for m in missing)})"
            )
        acc = analytics.RunAccounting(
            t_p=args.tp, t_d=args.td, t_c=args.tc, n_masters=args.nm, n_subimages=args.ns
        )
    report = {
        "t_p": acc.t_p,
        "t_d": acc.t_d,
        "t_c": acc.t_c,
        "n_masters": acc.n_masters,
        "n_subimages": acc.n_subimages,
        "master_rate_s_per_image": analytics.master_rate(acc),
        "subimage_rate_s_per_image": analytics.subimage_rate(acc),
    }
    if args.ci is not None:
        k, n = args.ci
        lower, upper = analytics.clopper_pearson(k, n, args.alpha)
        report["confidence_interval"] = {
            "successes": k,
            "trials": n,
            "alpha": args.alpha,
            "lower": lower,
            "upper": upper,
        }
    if args.report is not None:
        if args.format == "csv":
            lines = ["metric,value"]
            for key, value in report.items():
                if isinstance(value, dict):
                    lines.extend(f"{key}.{k2},{v2}" for k2, v2 in value.items())
                else:
                    lines.append(f"{key},{value}")
            ioutil.write_text(args.report, "\n".join(lines) + "\n")
        else:
            ioutil.write_json(args.report, report)
    print(
        f"t_m = {report['master_rate_s_per_image']:.3f} s/image   "
        f"t_s = {report['subimage_rate_s_per_image']:.3f} s/image"
    )
    if args.ci is not None:
        ci = report["confidence_interval"]
        print(
            f"Clopper-Pearson [{ci['lower']:.3f}, {ci['upper']:.3f}] "
            f"for {ci['successes']}/{ci['trials']} at alpha={ci['alpha']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gantrysim",
        description=(
            "Desk-scale gantry imaging toolkit: route planning, run simulation "
            "with geometric auto-labeling, chroma-key segmentation, metadata "
            "validation, and production statistics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="order waypoints with the nested zig-zag planner")
    p.add_argument("--config", type=Path, default=None, help="toolkit config JSON")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--waypoints", type=Path, help="waypoints JSON file")
    group.add_argument("--random", type=int, metavar="N", help="generate N random waypoints")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for --random")
    p.add_argument("--slab-width", type=float, default=None, help="slab width in mm")
    p.add_argument("--column-width", type=float, default=None, help="column width in mm")
    p.add_argument("--out", type=Path, default=Path("route.json"))
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run the imaging simulation and write a run directory")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--scene", type=Path, required=True, help="scene JSON file")
    p.add_argument("--poses", type=Path, required=True, help="camera poses JSON file")
    p.add_argument(
        "--order",
        choices=("zigzag", "file"),
        default="zigzag",
        help="visit poses in zig-zag order (default) or file order",
    )
    p.add_argument("--scale", type=int, default=None, help="render downsampling factor")
    p.add_argument("--legacy-origin", action="store_true",
                   help="emit box x coordinates with the legacy right-side origin")
    p.add_argument("--out", type=Path, required=True, help="run output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("segment", help="chroma-key or background-subtract an image")
    p.add_argument("image", type=Path)
    p.add_argument("--threshold", type=float, default=segmentation.DEFAULT_THRESHOLD,
                   help="CIELAB b threshold (foreground above)")
    p.add_argument("--background", type=Path, default=None,
                   help="reference shot for background subtraction")
    p.add_argument("--tolerance", type=int, default=0,
                   help="per-channel tolerance for background subtraction")
    p.add_argument("--blur", type=int, default=0, help="box-blur radius applied first")
    p.add_argument("--dilate", type=int, default=0, help="dilation radius")
    p.add_argument("--fill-holes", action="store_true")
    p.add_argument("--erode", type=int, default=0, help="erosion radius")
    p.add_argument("--out", type=Path, default=Path("mask.png"))
    p.add_argument("--report", type=Path, default=None, help="stats JSON output")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("validate", help="validate run metadata and file layout")
    p.add_argument("path", type=Path, help="run directory or metadata directory")
    p.add_argument("--legacy-origin", action="store_true")
    p.add_argument("--report", type=Path, default=None, help="error report JSON output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="production rates from a run log or explicit numbers")
    p.add_argument("--run-log", type=Path, default=None, help="run_log.json from simulate")
    p.add_argument("--tp", type=float, default=None, help="imaging time t_p (s)")
    p.add_argument("--td", type=float, default=None, help="download time t_d (s)")
    p.add_argument("--tc", type=float, default=0.0, help="cropping time t_c (s)")
    p.add_argument("--nm", type=int, default=None, help="master image count")
    p.add_argument("--ns", type=int, default=None, help="subimage count")
    p.add_argument("--ci", type=int, nargs=2, metavar=("K", "N"), default=None,
                   help="also report the exact binomial interval for K of N")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--report", type=Path, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
