"""Seeded benchmark sweeps over sampled instances, written as CSV."""
from __future__ import annotations

import csv
import io
import itertools
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ContractError, dump_json
from .geometry import SamplerParams, sample_instance
from .grid import HEX, SQRT3, GridGraph, lattice_dim
from .pipeline import PipelineConfig, solve

WORKERS_ENV = "SEAR_WORKERS"

COLUMNS = (
    "n", "delta", "d", "grid", "router",
    "lb_mean", "makespan_mean", "total_distance_mean", "opt_ratio_mean", "wall_time_mean_s",
    "success_count",
    "reps", "complete",
    "lb_std", "makespan_std", "total_distance_std", "opt_ratio_std",
    "lambda_start_mean", "lambda_goal_mean", "route_steps_mean", "longer_side_mean",
)


@dataclass(frozen=True)
class SweepSpec:
    points: tuple  # (n, delta, d) triples
    grids: tuple = (HEX,)
    routers: tuple = ("sag",)
    reps: int = 10
    base_seed: int = 0
    r: float = 1.0

    def __post_init__(self):
        if self.reps < 1:
            raise ContractError("reps must be at least 1")
        for n, delta, d in self.points:
            for g in self.grids:
                SamplerParams(n=int(n), r=self.r, delta=float(delta), d=float(d), k=lattice_dim(g))

    @classmethod
    def grid_of(cls, ns, deltas=(0.0,), ds=(0.0,), **kw) -> "SweepSpec":
        return cls(points=tuple(itertools.product(ns, deltas, ds)), **kw)


@dataclass
class RunResult:
    ok: bool
    lower_bound: float = float("nan")
    makespan: float = float("nan")
    total_distance: float = float("nan")
    opt_ratio: float | None = None
    wall_time: float = 0.0
    lambda_start: float = float("nan")
    lambda_goal: float = float("nan")
    route_steps: int = 0
    longer_side: int = 0
    error: str = ""


def longer_side_vertices(grid: GridGraph) -> int:
    """Number of lattice sites along the physically longer side of the grid."""
    ext = grid.extent
    if grid.kind == HEX:
        return int(ext[0] if ext[0] * SQRT3 / 2.0 >= ext[1] * 1.5 else ext[1])
    return int(max(ext))


def _tag(n, delta, d, grid, router, rep) -> str:
    return f"{grid}_{router}_n{n}_delta{delta:g}_d{d:g}_rep{rep}"


def run_one(n: int, delta: float, d: float, grid: str, router: str, seed: int, r: float = 1.0,
            plans_dir: str | None = None, tag: str = "") -> RunResult:
    params = SamplerParams(n=n, r=r, delta=delta, d=d, k=lattice_dim(grid), seed=seed)
    inst = sample_instance(params)
    try:
        plan, trace, metrics = solve(inst, PipelineConfig(grid=grid, router=router))
    except Exception as exc:  # recorded as a failed repetition
        return RunResult(False, error=f"{type(exc).__name__}: {exc}")
    if plans_dir is not None:
        out = Path(plans_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(inst.to_json(), out / f"{tag}.instance.json")
        dump_json(plan.to_json(), out / f"{tag}.plan.json")
    return RunResult(
        True,
        lower_bound=metrics.lower_bound,
        makespan=metrics.makespan,
        total_distance=metrics.total_distance,
        opt_ratio=metrics.optimality_ratio,
        wall_time=metrics.wall_time_seconds,
        lambda_start=trace.lambda_start,
        lambda_goal=trace.lambda_goal,
        route_steps=trace.discrete_steps,
        longer_side=longer_side_vertices(trace.grid),
    )


def _task(args) -> RunResult:
    try:
        return run_one(*args)
    except Exception:  # sampling failures and the like
        return RunResult(False, error=traceback.format_exc(limit=1))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def _stats(values) -> tuple:
    vals = np.array([v for v in values if v is not None and np.isfinite(v)], dtype=float)
    if vals.size == 0:
        return None, None
    return float(vals.mean()), float(vals.std())


def summarize(n, delta, d, grid, router, results: list[RunResult], deterministic: bool = False) -> dict:
    good = [res for res in results if res.ok]
    row = {"n": n, "delta": delta, "d": d, "grid": grid, "router": router}
    for key, attr in (("lb", "lower_bound"), ("makespan", "makespan"),
                      ("total_distance", "total_distance"), ("opt_ratio", "opt_ratio")):
        mean, std = _stats([getattr(res, attr) for res in good])
        row[f"{key}_mean"] = mean
        row[f"{key}_std"] = std
    row["wall_time_mean_s"] = 0.0 if deterministic else _stats([res.wall_time for res in good])[0]
    row["success_count"] = len(good)
    row["reps"] = len(results)
    row["complete"] = int(len(good) == len(results))
    row["lambda_start_mean"] = _stats([res.lambda_start for res in good])[0]
    row["lambda_goal_mean"] = _stats([res.lambda_goal for res in good])[0]
    row["route_steps_mean"] = _stats([res.route_steps for res in good])[0]
    row["longer_side_mean"] = _stats([res.longer_side for res in good])[0]
    return row


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ContractError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_sweep(spec: SweepSpec, workers: int | None = None, plans_dir: str | None = None,
              deterministic: bool = False) -> list[dict]:
    """Run every repetition of every (point, grid, router) and return one row per combination.

    Repetition ``i`` of every point uses seed ``base_seed + i``.
    """
    workers = worker_count() if workers is None else workers
    combos = [(int(n), float(delta), float(d), g, rt)
              for (n, delta, d) in spec.points for g in spec.grids for rt in spec.routers]
    tasks = []
    for n, delta, d, g, rt in combos:
        for rep in range(spec.reps):
            tasks.append((n, delta, d, g, rt, spec.base_seed + rep, spec.r, plans_dir,
                          _tag(n, delta, d, g, rt, rep)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    rows = []
    for c, combo in enumerate(combos):
        chunk = results[c * spec.reps:(c + 1) * spec.reps]
        rows.append(summarize(*combo, chunk, deterministic=deterministic))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in COLUMNS])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(rows_to_csv(rows))

