"""Command line: ``sear generate | solve | bench | render``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import SweepSpec, run_sweep, write_csv
from .core import Plan, ProblemInstance, SchemaError, SearError, dump_json, load_json
from .geometry import SamplerParams, sample_instance
from .grid import GridGraph
from .pipeline import PipelineConfig, PlanValidationError, solve
from .render import RenderRangeError, render_svg
from .routing import router_names

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_SOLVER = 4
EXIT_VALIDATION = 5
EXIT_RANGE = 6


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", choices=("hex", "square", "cube"), default=None,
                   help="lattice kind (default: hex in 2D, cube in 3D)")
    p.add_argument("--edge-length", type=float, default=None, help="lattice edge length")
    p.add_argument("--router", default="sag", help="discrete router name")
    p.add_argument("--lam", default="auto", help="expansion factor or 'auto'")
    p.add_argument("--clearance-tol", type=float, default=None, help="clearance tolerance (default 1e-6 r)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sear", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=float, default=1.0)
    g.add_argument("--delta", type=float, default=0.0)
    g.add_argument("--d", type=float, default=0.0)
    g.add_argument("--k", type=int, default=2, choices=(2, 3))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)

    s = sub.add_parser("solve", help="plan, validate and write plan/trace/metrics")
    s.add_argument("instance", type=Path)
    _add_solver_flags(s)
    s.add_argument("--out", type=Path, required=True, help="output prefix; writes PREFIX.plan.json etc.")

    b = sub.add_parser("bench", help="run a seeded sweep and write a CSV")
    b.add_argument("--n", type=int, nargs="+", required=True)
    b.add_argument("--delta", type=float, nargs="+", default=[0.0])
    b.add_argument("--d", type=float, nargs="+", default=[0.0])
    b.add_argument("--grid", nargs="+", default=["hex"], choices=("hex", "square", "cube"))
    b.add_argument("--router", nargs="+", default=["sag"])
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--seed", type=int, default=0, help="base seed; repetition i uses seed + i")
    b.add_argument("--workers", type=int, default=None, help="worker processes (default $SEAR_WORKERS or 1)")
    b.add_argument("--plans-dir", type=Path, default=None, help="keep every solved instance and plan here")
    b.add_argument("--deterministic", action="store_true", help="write 0 wall time so reruns are byte-identical")
    b.add_argument("--out", type=Path, required=True)

    r = sub.add_parser("render", help="SVG snapshots of a plan")
    r.add_argument("instance", type=Path)
    r.add_argument("plan", type=Path)
    r.add_argument("--render-times", type=float, nargs="+", required=True)
    r.add_argument("--trace", type=Path, default=None, help="trace JSON; draws the lattice")
    r.add_argument("--out", type=Path, required=True, help="output prefix; writes PREFIX_t<time>.svg")
    return ap


def _load_instance(path: Path) -> ProblemInstance:
    return ProblemInstance.from_json(load_json(path))


def cmd_generate(args) -> int:
    inst = sample_instance(SamplerParams(n=args.n, r=args.r, delta=args.delta, d=args.d, k=args.k,
                                         seed=args.seed))
    dump_json(inst.to_json(), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    kind = args.grid or ("cube" if inst.dim == 3 else "hex")
    lam = args.lam if args.lam == "auto" else float(args.lam)
    config = PipelineConfig(grid=kind, edge_length=args.edge_length, lam=lam,
                            clearance_tol=args.clearance_tol, router=args.router)
    plan, trace, metrics = solve(inst, config)
    prefix = str(args.out)
    dump_json(plan.to_json(), prefix + ".plan.json")
    dump_json(trace.to_json(), prefix + ".trace.json")
    out = metrics.to_json()
    out["phases"] = {name: t1 - t0 for name, t0, t1 in trace.phases}
    out["validation"] = trace.report.to_json() if trace.report is not None else None
    dump_json(out, prefix + ".metrics.json")
    print(json.dumps({k: out[k] for k in ("makespan", "total_distance", "lower_bound", "optimality_ratio")}))
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = SweepSpec.grid_of(args.n, args.delta, args.d, grids=tuple(args.grid), routers=tuple(args.router),
                             reps=args.reps, base_seed=args.seed)
    rows = run_sweep(spec, workers=args.workers,
                     plans_dir=None if args.plans_dir is None else str(args.plans_dir),
                     deterministic=args.deterministic)
    write_csv(rows, args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    inst = _load_instance(args.instance)
    plan = Plan.from_json(load_json(args.plan))
    grid = None
    if args.trace is not None:
        desc = load_json(args.trace).get("grid")
        if desc is not None:
            grid = GridGraph.from_descriptor(desc)
    for t in args.render_times:
        svg = render_svg(plan, t, inst.radius, grid=grid, goal=inst.goal.positions)
        Path(f"{args.out}_t{t:g}.svg").write_text(svg)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "render": cmd_render}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "router", None) is not None:
        names = router_names()
        wanted = args.router if isinstance(args.router, list) else [args.router]
        for name in wanted:
            if name not in names:
                print(f"sear: unknown router {name!r}; known: {', '.join(names)}", file=sys.stderr)
                return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except SchemaError as exc:
        print(f"sear: bad input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except PlanValidationError as exc:
        print(f"sear: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RenderRangeError as exc:
        print(f"sear: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except SearError as exc:
        print(f"sear: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"sear: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
