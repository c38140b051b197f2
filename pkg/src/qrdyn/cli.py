"""Command-line front end: classification runs, estimator scans, reports.

Every subcommand writes its artifacts (PGM/CSV/JSON plus a rendered PNG)
into --out together with a manifest carrying parameters, seeds, grid
geometry, version and content hashes.  Exit codes: 0 success, 2 usage error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, figures
from .artifacts import (
    RunManifest,
    Stopwatch,
    read_csv_points,
    write_csv_points,
    write_grid_artifacts,
    write_json,
    write_pgm,
)
from .calculus import estimate_dilatation, harnack_ratio
from .capacity import (
    CapacityError,
    build_from_points,
    build_grotzsch,
    build_ring,
    grotzsch_capacity,
    ring_capacity_exact,
    solve_capacity,
)
from .dynamics import ClassifyBudget, classify_grid, find_fixed_points
from .grids import Grid
from .julia import (
    backward_orbit_sample,
    box_dimension,
    julia_boundary_estimate,
    julia_membership_spreading,
)
from .mapspec import MapSpec, ParameterError, QrdynError
from .maps import build_map, registered_maps, registry_manifest
from .pits import pits_scan, sublevel_sample, threshold_robustness

USAGE_ERROR = 2
NUMERIC_ERROR = 3


class UsageError(Exception):
    pass


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"malformed --param {item!r}; expected name=value")
        key, _, val = item.partition("=")
        key = key.strip()
        val = val.strip()
        if not key or not val:
            raise UsageError(f"malformed --param {item!r}; expected name=value")
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise UsageError(f"parameter {key!r} needs a numeric value, got {val!r}") from exc
    return out


def _parse_floats(text: str, name: str, counts=None) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"malformed --{name} {text!r}") from exc
    if counts and len(vals) not in counts:
        raise UsageError(f"--{name} expects {' or '.join(map(str, counts))} values")
    return vals


def _build_map(args) -> MapSpec:
    params = _parse_params(getattr(args, "param", None))
    try:
        return build_map(args.map, **params)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("QRDYN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "qrdyn_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _budget(args) -> ClassifyBudget:
    return ClassifyBudget(
        k_max=args.kmax,
        t_escape=args.t_escape,
        t_bound=args.t_bound,
        basin_tol=args.basin_tol,
    )


def _attractors(spec: MapSpec, window, budget: ClassifyBudget):
    search = find_fixed_points(spec, window, period=1, seeds=16)
    att = [r for r in search.records if r.stability == "attracting"]
    return att


# -- subcommand implementations -------------------------------------------------

def _cmd_list_maps(args) -> int:
    manifest = registry_manifest()
    if args.json:
        print(json.dumps(manifest, indent=2, sort_keys=True))
    else:
        for name in registered_maps():
            entry = manifest[name]
            params = ", ".join(f"{k}={v:g}" for k, v in sorted(entry["default_params"].items()))
            print(f"{name:15s} n={entry['dimension']}  {params or '(no parameters)'}")
    return 0


def _cmd_classify(args) -> int:
    spec = _build_map(args)
    window = _parse_floats(args.window, "window", {4, 6})
    res = tuple(int(v) for v in _parse_floats(args.res, "res", {1, 2, 3}))
    n = len(window) // 2
    if len(res) == 1:
        res = res * n
    if len(res) != n or spec.dimension != n:
        raise UsageError("window/res dimensionality must match the map")
    grid = Grid(window=window, shape=res)
    budget = _budget(args)
    out = _out_dir(args)
    with Stopwatch() as sw:
        attractors = _attractors(spec, window, budget)
        labeled = classify_grid(spec, grid, budget, attractors, threads=_threads(args))
        paths = write_grid_artifacts(labeled, out, "classify_labels")
        paths.append(figures.render_grid(labeled, out / "classify_figure.png",
                                         title=f"{spec.name} orbit classes"))
    manifest = RunManifest(
        command="classify",
        map_name=spec.name,
        params=dict(spec.params),
        knobs={
            "kmax": budget.k_max,
            "t_escape": budget.t_escape,
            "t_bound": budget.t_bound,
            "basin_tol": budget.basin_tol,
            "threads": _threads(args),
            "attractors": [list(a.location) for a in attractors],
        },
        seed=args.seed,
        grid_geometry={"window": list(window), "shape": list(res)},
        wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs(paths)
    manifest.save(out, "classify_manifest")
    print(f"classified {grid.n_cells()} cells -> {out}")
    return 0


def _cmd_julia(args) -> int:
    spec = _build_map(args)
    out = _out_dir(args)
    knobs: dict = {"method": args.method}
    paths = []
    with Stopwatch() as sw:
        if args.method == "backward":
            if not args.seed_point:
                raise UsageError("--seed-point is required for the backward method")
            seed_pt = _parse_floats(args.seed_point, "seed-point", {spec.dimension})
            sample = backward_orbit_sample(
                spec, seed_pt, steps=args.steps,
                branch_window=args.branch_window, rng_seed=args.seed,
            )
            if sample.warning:
                print(f"warning: {sample.warning}", file=sys.stderr)
            knobs.update({"steps": args.steps, "branch_window": args.branch_window,
                          "seed_point": list(seed_pt), "warning": sample.warning})
            pts = sample.points
        elif args.method == "boundary":
            if not (args.window and args.res):
                raise UsageError("--window and --res are required for the boundary method")
            window = _parse_floats(args.window, "window", {4, 6})
            res = tuple(int(v) for v in _parse_floats(args.res, "res", {1, 2, 3}))
            if len(res) == 1:
                res = res * (len(window) // 2)
            grid = Grid(window=window, shape=res)
            budget = _budget(args)
            attractors = _attractors(spec, window, budget)
            labeled = classify_grid(spec, grid, budget, attractors, threads=_threads(args))
            sample = julia_boundary_estimate(spec, labeled)
            knobs.update({"window": list(window), "res": list(res), "kmax": budget.k_max})
            pts = sample.points
        else:  # spreading
            if not args.point:
                raise UsageError("--point is required for the spreading method")
            pt = _parse_floats(args.point, "point", {spec.dimension})
            ref_window = (
                _parse_floats(args.ref_window, "ref-window", {4, 6})
                if args.ref_window else None
            )
            verdict = julia_membership_spreading(
                spec, pt, radius=args.radius, depth=args.depth,
                ref_window=ref_window, ref_resolution=args.ref_res,
            )
            report = dict(verdict.to_dict(), point=list(pt))
            p = out / "julia_spreading.json"
            write_json(report, p)
            paths.append(p)
            knobs.update(report)
            pts = None
        if pts is not None:
            p = out / "julia_points.csv"
            write_csv_points(pts, p)
            paths.append(p)
            paths.append(figures.render_points(
                pts, out / "julia_figure.png",
                title=f"{spec.name} Julia sample ({args.method}, {pts.shape[0]} pts)"))
            knobs["points"] = int(pts.shape[0])
    manifest = RunManifest(
        command="julia", map_name=spec.name, params=dict(spec.params),
        knobs=knobs, seed=args.seed, grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs(paths)
    manifest.save(out, "julia_manifest")
    print(f"julia ({args.method}) -> {out}")
    return 0


def _cmd_boxdim(args) -> int:
    pts = read_csv_points(Path(args.csv))
    window = _parse_floats(args.window, "window", {4, 6}) if args.window else None
    scales = list(_parse_floats(args.scales, "scales")) if args.scales else None
    out = _out_dir(args)
    with Stopwatch() as sw:
        dim, diag = box_dimension(pts, window=window, scales=scales)
        report = {"dimension": dim, **diag, "source": str(args.csv)}
        p = out / "boxdim.json"
        write_json(report, p)
        fig = figures.render_boxdim(diag["scales"], diag["counts"], dim,
                                    out / "boxdim_figure.png")
    manifest = RunManifest(
        command="boxdim", map_name=None, params={}, knobs=report, seed=args.seed,
        grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs([p, fig])
    manifest.save(out, "boxdim_manifest")
    print(f"box dimension {dim:.4f} (r^2 {diag['r_squared']:.4f}) -> {out}")
    return 0


def _cmd_pits_scan(args) -> int:
    spec = _build_map(args)
    radii = list(_parse_floats(args.radii, "radii"))
    out = _out_dir(args)
    with Stopwatch() as sw:
        report = pits_scan(spec, N=args.N, c=args.c, eps=args.eps,
                           R_list=radii, density=args.density)
        payload = report.to_dict()
        if args.alpha is not None:
            payload["threshold_robustness"] = threshold_robustness(
                spec, args.alpha, N=args.N, c=args.c, eps=args.eps,
                R_list=radii, density=args.density,
            )
        paths = []
        p = out / "pits_report.json"
        write_json(payload, p)
        paths.append(p)
        samples_by_R = {}
        if args.dump_samples:
            for R in radii:
                s = sublevel_sample(spec, R, args.c, 1.0, args.density)
                samples_by_R[R] = s
                sp = out / f"pits_samples_R{R:g}.csv"
                write_csv_points(s, sp)
                paths.append(sp)
        else:
            largest = radii[-1]
            samples_by_R[largest] = sublevel_sample(spec, largest, args.c, 1.0, args.density)
        if report.witness_points is not None:
            wp = out / "pits_witness.csv"
            write_csv_points(report.witness_points, wp)
            paths.append(wp)
        paths.append(figures.render_pits(report, samples_by_R, out / "pits_figure.png"))
    manifest = RunManifest(
        command="pits-scan", map_name=spec.name, params=dict(spec.params),
        knobs={"N": args.N, "c": args.c, "eps": args.eps, "radii": radii,
               "alpha": args.alpha, "verdict": report.verdict},
        seed=args.seed, grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs(paths)
    manifest.save(out, "pits_manifest")
    print(f"pits verdict: {report.verdict} -> {out}")
    return 0


def _cmd_capacity(args) -> int:
    out = _out_dir(args)
    with Stopwatch() as sw:
        if args.shape == "ring":
            cond = build_ring(args.inner, args.outer, args.dim, args.res)
            reference = ring_capacity_exact(args.inner, args.outer, args.dim)
            value = solve_capacity(cond, tol=args.tol, max_iters=args.max_iters)
            report = {
                "shape": "ring", "inner": args.inner, "outer": args.outer,
                "dim": args.dim, "resolution": args.res, "capacity": value,
                "closed_form": reference,
                "relative_error": (value - reference) / reference,
            }
        elif args.shape == "grotzsch":
            q = grotzsch_capacity(args.t, args.dim, args.res)
            cond = None
            report = {"shape": "grotzsch", **q.to_dict(), "resolution": args.res}
        else:  # points
            pts = read_csv_points(Path(args.csv))
            window = _parse_floats(args.window, "window", {4, 6}) if args.window else None
            if window is None:
                from .capacity import capacity_positive_heuristic

                verdict, diag = capacity_positive_heuristic(pts, resolution=args.res)
                report = {"shape": "points", "positive": verdict, **diag,
                          "resolution": args.res}
                cond = None
            else:
                cond = build_from_points(pts, window, args.res)
                value = solve_capacity(cond, tol=args.tol, max_iters=args.max_iters)
                report = {"shape": "points", "capacity": value,
                          "resolution": args.res, "count": int(pts.shape[0])}
        paths = []
        p = out / "capacity.json"
        write_json(report, p)
        paths.append(p)
        if cond is not None and cond.u is not None:
            if args.dump_potential and cond.dimension == 2:
                up = out / "capacity_potential.pgm"
                write_pgm(np.round(255 * np.clip(cond.u, 0, 1)).astype(np.uint8), up)
                paths.append(up)
            paths.append(figures.render_potential(
                cond.u, cond.window, out / "capacity_figure.png"))
    manifest = RunManifest(
        command="capacity", map_name=None, params={},
        knobs={k: v for k, v in report.items() if not isinstance(v, dict)},
        seed=args.seed, grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs(paths)
    manifest.save(out, "capacity_manifest")
    cap_txt = report.get("capacity", report.get("cap_value", report.get("positive")))
    print(f"capacity [{args.shape}]: {cap_txt} -> {out}")
    return 0


def _cmd_dilatation(args) -> int:
    spec = _build_map(args)
    region = _parse_floats(args.region, "region", {4, 6})
    out = _out_dir(args)
    with Stopwatch() as sw:
        report = estimate_dilatation(spec, region, samples=args.samples, rng_seed=args.seed)
        p = out / "dilatation.json"
        write_json(report.to_dict(), p)
        # per-sample outer-distortion spread for the figure
        from .calculus import _sample_box, derivative_matrix, singular_values

        pts = _sample_box(region, min(args.samples, 2000), args.seed)
        jac = derivative_matrix(spec, pts)
        smax, smin, det = singular_values(jac)
        good = det > 1e-12
        ratios = smax[good] ** spec.dimension / det[good]
        fig = figures.render_histogram(
            np.log10(ratios), out / "dilatation_figure.png",
            xlabel="log10 outer distortion", title=f"{spec.name}: K_est={report.K_est:.3f}")
    manifest = RunManifest(
        command="dilatation", map_name=spec.name, params=dict(spec.params),
        knobs={"region": list(region), "samples": args.samples, **report.to_dict()},
        seed=args.seed, grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs([p, fig])
    manifest.save(out, "dilatation_manifest")
    print(f"K_est = {report.K_est:.4f} -> {out}")
    return 0


def _cmd_harnack(args) -> int:
    spec = _build_map(args)
    center = _parse_floats(args.center, "center", {spec.dimension})
    out = _out_dir(args)
    with Stopwatch() as sw:
        report = harnack_ratio(spec, center, args.r, samples=args.samples)
        p = out / "harnack.json"
        write_json(report.to_dict(), p)
        from .calculus import ball_lattice

        pts = ball_lattice(spec.dimension, center, args.r, args.samples)
        vals = np.linalg.norm(spec(pts), axis=1)
        fig = figures.render_histogram(
            np.log(vals[vals > 0]), out / "harnack_figure.png",
            xlabel="log |f|", title=f"theta_est = {report.theta_est:.4f}")
    manifest = RunManifest(
        command="harnack", map_name=spec.name, params=dict(spec.params),
        knobs=report.to_dict(), seed=args.seed, grid_geometry=None,
        wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs([p, fig])
    manifest.save(out, "harnack_manifest")
    print(f"harnack valid={report.valid} theta={report.theta_est} -> {out}")
    return 0


def _cmd_fixed_points(args) -> int:
    spec = _build_map(args)
    region = _parse_floats(args.region, "region", {4, 6})
    out = _out_dir(args)
    with Stopwatch() as sw:
        search = find_fixed_points(spec, region, period=args.period, seeds=args.seeds)
        p = out / "fixed_points.csv"
        with open(p, "w") as fh:
            cols = [f"x{i+1}" for i in range(spec.dimension)]
            fh.write(",".join(cols + ["period", "multiplier", "stability"]) + "\n")
            for r in search.records:
                loc = ",".join(f"{v:.17g}" for v in r.location)
                fh.write(f"{loc},{r.period},{r.multiplier_estimate:.17g},{r.stability}\n")
    manifest = RunManifest(
        command="fixed-points", map_name=spec.name, params=dict(spec.params),
        knobs={"region": list(region), "period": args.period, "seeds": args.seeds,
               "found": len(search.records),
               "continuum_of_fixed_points": search.continuum_of_fixed_points},
        seed=args.seed, grid_geometry=None, wall_clock_s=sw.elapsed,
    )
    manifest.add_outputs([p])
    manifest.save(out, "fixed_points_manifest")
    if search.continuum_of_fixed_points:
        print("warning: continuum of fixed points suspected", file=sys.stderr)
    print(f"{len(search.records)} fixed points -> {out}")
    return 0


# -- parser ---------------------------------------------------------------------

def _add_common(sp, with_map=True):
    if with_map:
        sp.add_argument("--map", required=True, help="registered map name")
        sp.add_argument("--param", action="append", metavar="NAME=VALUE",
                        help="map parameter override (repeatable)")
    sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sp.add_argument("--threads", type=int, default=0,
                    help="worker cap (default: QRDYN_THREADS or all cores)")
    sp.add_argument("--out", default=None, help="output directory (default qrdyn_out)")


def _add_budget(sp):
    sp.add_argument("--kmax", type=int, default=500)
    sp.add_argument("--t-escape", dest="t_escape", type=float, default=1e10)
    sp.add_argument("--t-bound", dest="t_bound", type=float, default=1e4)
    sp.add_argument("--basin-tol", dest="basin_tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qrdyn",
        description="dynamics toolkit for entire quasiregular maps",
    )
    ap.add_argument("--version", action="version", version=f"qrdyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("list-maps", help="print the registered map zoo")
    sp.add_argument("--json", action="store_true", help="emit the registry manifest as JSON")
    sp.set_defaults(func=_cmd_list_maps)

    sp = sub.add_parser("classify", help="label a grid of orbit classes")
    _add_common(sp)
    sp.add_argument("--window", required=True, help="x0,x1,y0,y1[,z0,z1]")
    sp.add_argument("--res", required=True, help="cells per axis (one value or per-axis)")
    _add_budget(sp)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("julia", help="Julia-set estimators")
    _add_common(sp)
    sp.add_argument("--method", choices=["boundary", "backward", "spreading"], required=True)
    sp.add_argument("--window", help="classification window (boundary method)")
    sp.add_argument("--res", help="classification resolution (boundary method)")
    sp.add_argument("--seed-point", dest="seed_point", help="backward-orbit seed point")
    sp.add_argument("--steps", type=int, default=10000)
    sp.add_argument("--branch-window", dest="branch_window", type=int, default=2)
    sp.add_argument("--point", help="query point (spreading method)")
    sp.add_argument("--radius", type=float, default=0.05)
    sp.add_argument("--depth", type=int, default=30)
    sp.add_argument("--ref-window", dest="ref_window", help="reference window (spreading)")
    sp.add_argument("--ref-res", dest="ref_res", type=int, default=None)
    _add_budget(sp)
    sp.set_defaults(func=_cmd_julia)

    sp = sub.add_parser("boxdim", help="box-counting dimension of a CSV point cloud")
    _add_common(sp, with_map=False)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--window", default=None)
    sp.add_argument("--scales", default=None, help="comma-separated cell sizes")
    sp.set_defaults(func=_cmd_boxdim)

    sp = sub.add_parser("pits-scan", help="pits-effect detection scan")
    _add_common(sp)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--c", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--radii", default="10,20,40,80")
    sp.add_argument("--alpha", type=float, default=None,
                    help="also run the R^alpha threshold-robustness check")
    sp.add_argument("--density", type=int, default=None)
    sp.add_argument("--dump-samples", action="store_true")
    sp.set_defaults(func=_cmd_pits_scan)

    sp = sub.add_parser("capacity", help="condenser capacity solves")
    cap_sub = sp.add_subparsers(dest="shape", required=True)
    for shape in ("ring", "grotzsch", "points"):
        cs = cap_sub.add_parser(shape)
        _add_common(cs, with_map=False)
        cs.add_argument("--res", type=int, default=256)
        cs.add_argument("--tol", type=float, default=1e-7)
        cs.add_argument("--max-iters", dest="max_iters", type=int, default=4000)
        cs.add_argument("--dump-potential", dest="dump_potential", action="store_true")
        if shape == "ring":
            cs.add_argument("--inner", type=float, required=True)
            cs.add_argument("--outer", type=float, required=True)
            cs.add_argument("--dim", type=int, default=2, choices=(2, 3))
        elif shape == "grotzsch":
            cs.add_argument("--t", type=float, required=True)
            cs.add_argument("--dim", type=int, default=2, choices=(2, 3))
        else:
            cs.add_argument("--csv", required=True)
            cs.add_argument("--window", default=None)
        cs.set_defaults(func=_cmd_capacity)

    sp = sub.add_parser("dilatation", help="sampled distortion bounds over a region")
    _add_common(sp)
    sp.add_argument("--region", required=True, help="x0,x1,y0,y1[,z0,z1]")
    sp.add_argument("--samples", type=int, default=2000)
    sp.set_defaults(func=_cmd_dilatation)

    sp = sub.add_parser("harnack", help="Harnack ratio probe on a ball")
    _add_common(sp)
    sp.add_argument("--center", required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--samples", type=int, default=512)
    sp.set_defaults(func=_cmd_harnack)

    sp = sub.add_parser("fixed-points", help="Newton search for periodic points")
    _add_common(sp)
    sp.add_argument("--region", required=True)
    sp.add_argument("--period", type=int, default=1)
    sp.add_argument("--seeds", type=int, default=64)
    sp.set_defaults(func=_cmd_fixed_points)

    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        if "unknown map" in str(exc):
            print(f"registered maps: {', '.join(registered_maps())}", file=sys.stderr)
        return USAGE_ERROR
    except CapacityError as exc:
        print(f"numeric failure: {exc} (best value {exc.best_value}, "
              f"gradient norm {exc.grad_norm})", file=sys.stderr)
        return NUMERIC_ERROR
    except QrdynError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
