"""Command line: analyze | verify | build-graph | tangent | gen | render.

Exit codes: 0 success, 1 failed check or aborted construction, 2 bad input,
3 oracle self-validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import corpus
from . import graph_builder as gb
from . import io as gio
from . import multiscale as ms
from . import verify as vf

EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_ORACLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, grid: bool = False, construction: bool = False):
    if grid:
        p.add_argument("--rmin", type=float, default=None, help="smallest radius (default 1e-3 diam)")
        p.add_argument("--rmax", type=float, default=None, help="largest radius (default diam)")
        p.add_argument("--per-octave", type=int, default=8, help="radii per octave (default 8)")
    if construction:
        d = gb.ConstructionParams()
        p.add_argument("--theta", type=float, default=d.theta, help=f"density threshold (default {d.theta})")
        p.add_argument("--alpha", type=float, default=d.alpha, help=f"angle budget in radians (default {d.alpha})")
        p.add_argument("--flat-param", type=float, default=d.flat_param, help=f"flatness parameter (default {d.flat_param})")
        p.add_argument("--c0", type=float, default=d.c0, help=f"root mass constant (default {d.c0})")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for per-point maps (default 1)")
    p.add_argument("--out", default=".", help="output directory (default .)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="geosquare", description="Multiscale square functions and Lipschitz-graph construction.")
    ap.add_argument("--version", action="version", version=f"geosquare {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="per-point energies of a curve")
    p.add_argument("curve", help="curve JSON file")
    p.add_argument("--samples", type=int, default=100, help="equal-arclength boundary samples (default 100)")
    p.add_argument("--beta-scales", type=float, nargs="*", default=None, help="radii for the beta profile (default rmax/2^k, k=1..4)")
    p.add_argument("--svg", action="store_true", help="also write an energy heat rendering")
    _common(p, grid=True)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(vf.SUITES), help="suite id")
    _common(p)

    p = sub.add_parser("build-graph", help="Lipschitz graph from a weighted point set")
    p.add_argument("measure", help="measure CSV (x,y,w)")
    p.add_argument("--curve", default=None, help="curve JSON carrying the measure; best lines are then fitted to the curve")
    p.add_argument("--center", type=float, nargs=2, default=None, help="root ball centre (default from the file, else nearest support point to the bbox centre)")
    p.add_argument("--radius", type=float, default=None, help="root ball radius (default from the file, else total mass)")
    _common(p, construction=True)

    p = sub.add_parser("tangent", help="per-point tangent verdicts")
    p.add_argument("curve", help="curve JSON file")
    p.add_argument("--samples", type=int, default=100, help="equal-arclength boundary samples (default 100)")
    p.add_argument("--vertices", action="store_true", help="also test every vertex of the curve")
    _common(p, grid=True)

    p = sub.add_parser("gen", help="write a corpus curve and optionally a measure")
    p.add_argument("kind", choices=["circle", "square", "wedge", "koch", "line", "lipschitz"])
    p.add_argument("--n", type=int, default=4096, help="circle vertex count (default 4096)")
    p.add_argument("--omega", type=float, default=math.pi / 2, help="wedge opening angle (default pi/2)")
    p.add_argument("--depth", type=int, default=3, help="Koch depth (default 3)")
    p.add_argument("--slope-cap", type=float, default=0.05, help="Lipschitz graph slope (default 0.05)")
    p.add_argument("--degree", type=int, default=6, help="trig degree of Lipschitz graphs (default 6)")
    p.add_argument("--measure", type=int, default=0, help="also write a measure with this many points")
    p.add_argument("--noise", type=float, default=0.0, help="fraction of measure points moved off the curve")
    _common(p)

    p = sub.add_parser("render", help="SVG of a curve, measure and/or graph")
    p.add_argument("--curve", default=None)
    p.add_argument("--measure", default=None)
    p.add_argument("--graph", default=None, help="graph JSON written by build-graph")
    _common(p)
    return ap


def _config(args, inputs=(), **extra) -> gio.RunConfig:
    g = lambda k, d=None: getattr(args, k, d)  # noqa: E731
    d = gb.ConstructionParams()
    return gio.RunConfig(
        command=args.command,
        inputs=tuple(str(i) for i in inputs if i is not None),
        r_min=g("rmin"),
        r_max=g("rmax"),
        per_octave=g("per_octave", 8),
        theta=g("theta", d.theta),
        alpha=g("alpha", d.alpha),
        flat_param=g("flat_param", d.flat_param),
        c0=g("c0", d.c0),
        seed=args.seed,
        threads=args.threads,
        out=args.out,
        render=bool(g("svg", False)),
        extra=extra,
    )


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def _grid(args, domain) -> ms.RadialGrid:
    r_max = args.rmax if args.rmax is not None else domain.diam
    r_min = args.rmin if args.rmin is not None else 1e-3 * domain.diam
    if not 0 < r_min < r_max:
        raise gio.InputError("need 0 < rmin < rmax")
    if args.per_octave < 4:
        raise gio.InputError("--per-octave must be at least 4")
    return ms.RadialGrid.build(r_min, r_max, args.per_octave)


def _report_task(job):
    domain, x, grid, scales = job
    return ms.coefficient_report(domain, x, grid, scales)


def _tangent_task(job):
    domain, x, grid = job
    v = ms.tangent_detect(domain, x, grid)
    return v.verdict, v.finest_passing_scale, [v.passing_radius[a] for a in sorted(v.passing_radius)]


def _heat(values) -> list:
    v = np.log10(np.maximum(np.asarray(values, dtype=float), 1e-12))
    lo, hi = float(v.min()), float(v.max())
    t = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    return [f"#{int(round(255 * s)):02x}00{int(round(255 * (1 - s))):02x}" for s in t]


def cmd_analyze(args) -> int:
    domain = gio.read_curve(args.curve)
    grid = _grid(args, domain)
    if args.samples < 1:
        raise gio.InputError("--samples must be positive")
    scales = args.beta_scales if args.beta_scales is not None else [grid.r_max / 2 ** k for k in range(1, 5)]
    pts, _ = corpus.arclength_points(domain, args.samples)
    reports = _pmap(_report_task, [(domain, p, grid, scales) for p in pts], args.threads)
    cfg = _config(args, [args.curve], samples=args.samples, beta_scales=list(scales))
    out = Path(args.out)
    gio.write_report(out / "report.csv", reports, scales, cfg)
    if args.svg:
        poly = corpus._polyline(domain)
        gio.render_svg(out / "report.svg", cfg, [poly], pts, _heat([r.eps_energy for r in reports]))
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args, [], suite=args.suite)
    out = Path(args.out) / f"verify_{args.suite}.json"
    try:
        oracle_rows = vf.check_oracles()
    except vf.OracleFailure as e:
        gio.write_verify(out, [], cfg, {"oracle_validation": str(e), "pass": False})
        print(f"oracle self-validation failed: {e}", file=sys.stderr)
        return EXIT_ORACLE
    records = vf.run_suite(args.suite, args.seed)
    ok = all(r.passed for r in records)
    summary = {"suite": args.suite, "records": len(records), "failed": sum(not r.passed for r in records), "pass": ok, "oracle_checks": len(oracle_rows)}
    gio.write_verify(out, [r.as_dict() for r in records], cfg, summary)
    print(f"{args.suite}: {'pass' if ok else 'FAIL'} ({summary['failed']} of {len(records)} records failed)")
    return 0 if ok else EXIT_FAIL


def _default_root(mu: gb.WeightedPointSet):
    lo, hi = mu.points.min(axis=0), mu.points.max(axis=0)
    mid = 0.5 * (lo + hi)
    i = int(np.argmin(np.hypot(*(mu.points - mid).T)))
    return mu.points[i], mu.total_mass


def cmd_build_graph(args) -> int:
    mu = gio.read_measure(args.measure)
    domain = gio.read_curve(args.curve) if args.curve else None
    try:
        params = gb.ConstructionParams(theta=args.theta, alpha=args.alpha, flat_param=args.flat_param, c0=args.c0)
    except ValueError as e:
        raise gio.InputError(str(e)) from e
    c_def, r_def = _default_root(mu)
    center = np.asarray(args.center if args.center is not None else (mu.root_center if mu.root_center is not None else c_def), dtype=float)
    R = float(args.radius if args.radius is not None else (mu.root_radius if mu.root_radius is not None else r_def))
    if not R > 0:
        raise gio.InputError("root radius must be positive")
    mass = mu.mass_in(center, R)
    if mass < params.c0 * R:
        print(f"warning: mu(B0) = {mass:.6g} < c0 r(B0) = {params.c0 * R:.6g}; proceeding", file=sys.stderr)
    cfg = _config(args, [args.measure, args.curve], center=list(map(float, center)), radius=R)
    out = Path(args.out)
    try:
        con = gb.construct(mu, params, center, R, domain)
    except (gb.NoCandidateBall, gb.NoVeryGoodBall, gb.EmptyBall, gb.ConstructionError, gb.ResolutionFloorHit) as e:
        err = {"header": {"version": __version__, "config": cfg.as_dict()}, "error": type(e).__name__, "message": str(e)}
        if isinstance(e, gb.NoCandidateBall):
            err["interval"] = list(map(float, e.interval))
        (out).mkdir(parents=True, exist_ok=True)
        gio._write_text(out / "graph_error.json", gio._dump_json(err))
        print(f"construction aborted: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    gio.write_graph(out / "graph.json", con, cfg)
    motion = con.stopping.motion
    curve = [motion.invert(con.graph.polyline())]
    if domain is not None:
        curve.append(corpus._polyline(domain))
    colors = {"Z": "#2ca02c", "LD": "#1f77b4", "BA": "#d62728"}
    gio.render_svg(out / "graph.svg", cfg, curve, mu.points, [colors[str(l)] for l in con.partition.labels])
    slope = con.graph.slope_on_grid()
    p = con.partition
    print(f"z={p.z_mass_fraction:.4f} ld={p.ld_mass_fraction:.4f} ba={p.ba_mass_fraction:.4f} slope={slope:.4f} piperp_violations={con.diagnostics.piperp_violations}")
    if params.alpha == gb.ConstructionParams().alpha and slope > 0.1:
        print(f"slope {slope:.4g} exceeds 1/10", file=sys.stderr)
        return EXIT_FAIL
    return 0


def cmd_tangent(args) -> int:
    domain = gio.read_curve(args.curve)
    grid = _grid(args, domain)
    pts, _ = corpus.arclength_points(domain, args.samples)
    if args.vertices:
        pts = np.vstack([pts, domain.vertices])
    res = _pmap(_tangent_task, [(domain, p, grid) for p in pts], args.threads)
    aps = sorted(ms.DEFAULT_APERTURES)
    cols = ["x", "y", "verdict", "finest_passing_scale"] + [f"pass_a{gio.fmt(a)}" for a in aps]
    rows = [[p[0], p[1], v, s] + list(pr) for p, (v, s, pr) in zip(pts, res)]
    cfg = _config(args, [args.curve], samples=args.samples, vertices=bool(args.vertices))
    gio.write_table(Path(args.out) / "tangent.csv", cols, rows, cfg)
    n_t = sum(v == "tangent" for v, _, _ in res)
    print(f"tangent {n_t} of {len(res)}")
    return 0


def cmd_gen(args) -> int:
    params = {"circle": {"n": args.n}, "square": {}, "wedge": {"omega": args.omega}, "koch": {"depth": args.depth}, "line": {}, "lipschitz": {"degree": args.degree, "slope_cap": args.slope_cap}}[args.kind]
    spec = corpus.CorpusSpec(args.kind, args.kind, params, args.seed)
    try:
        domain = corpus.generate(spec)
    except ValueError as e:
        raise gio.InputError(str(e)) from e
    spec_d = {"name": spec.name, "generator": spec.generator, "params": spec.params, "seed": spec.seed}
    cfg = _config(args, [], kind=args.kind, **{k: v for k, v in params.items()}, measure=args.measure, noise=args.noise)
    out = Path(args.out)
    gio.write_curve(out / f"{args.kind}.json", domain, cfg, spec_d)
    if args.measure:
        try:
            mu = corpus.sample_measure(domain, args.measure, mode="noise" if args.noise else "arclength", p=args.noise, seed=args.seed)
        except ValueError as e:
            raise gio.InputError(str(e)) from e
        gio.write_measure(out / f"{args.kind}_measure.csv", mu, cfg, spec_d)
    return 0


def cmd_render(args) -> int:
    if not (args.curve or args.measure or args.graph):
        raise gio.InputError("render needs --curve, --measure or --graph")
    polys, closed, pts = [], [], None
    if args.curve:
        d = gio.read_curve(args.curve)
        polys.append(corpus._polyline(d))
        closed.append(False)
    if args.graph:
        try:
            obj = json.loads(Path(args.graph).read_text(encoding="utf-8"))
            fr = obj["frame"]
            motion = gb.RigidMotion(np.asarray(fr["origin"], dtype=float), float(fr["angle"]))
            poly = np.column_stack([obj["grid"], obj["values"]])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise gio.InputError(f"graph file: {e}") from e
        polys.append(motion.invert(poly))
        closed.append(False)
    if args.measure:
        pts = gio.read_measure(args.measure).points
    cfg = _config(args, [args.curve, args.measure, args.graph])
    gio.render_svg(Path(args.out) / "render.svg", cfg, polys, pts, closed=closed)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "build-graph": cmd_build_graph,
    "tangent": cmd_tangent,
    "gen": cmd_gen,
    "render": cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except gio.InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
