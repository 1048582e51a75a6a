"""End-to-end acceptance checks; each prints a PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from sear import figure8 as f8
from sear.bench import SweepSpec, run_sweep
from sear.core import Configuration, Plan, ProblemInstance, validate_plan
from sear.geometry import SamplerParams, min_enclosing_ball, sample_instance
from sear.grid import HEX, SQUARE, build_covering_grid, default_edge_length, make_grid
from sear.pipeline import PipelineConfig, assign, expand, resolve_lambda, shift, solve
from sear.routing import DiscreteInstance, check_plan, get_router, reaches_goal, solve_optimal_bfs

from conftest import random_separated, record_acceptance

CLEARANCE_TOL = 1e-6


def as_plan(frag):
    return Plan(frag.trajectories, frag.duration)


def pairwise(p):
    d = np.linalg.norm(p[:, None] - p[None], axis=2)
    return d[np.triu_indices(len(p), 1)]


def r_squared(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return 1.0 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))


def test_criterion_1_end_to_end_validity():
    combos = list(itertools.product([5, 10, 20, 50, 100], [0.0, 1.0, 2.6], [0.0, 20.0], [HEX, SQUARE]))
    bad = []
    for i in range(200):
        n, delta, d, kind = combos[i % len(combos)]
        inst = sample_instance(SamplerParams(n=n, delta=delta, d=d, seed=1000 + i))
        plan, _, _ = solve(inst, PipelineConfig(grid=kind))
        report = validate_plan(inst, plan, clearance_tol=CLEARANCE_TOL * inst.radius)
        if not report.ok:
            bad.append((n, delta, d, kind, report.summary()))
    record_acceptance(1, "end-to-end plans validate", not bad, f"200 instances, {len(bad)} invalid")
    assert not bad


def test_criterion_2_expansion_exactness():
    rng = np.random.default_rng(2)
    worst, failures = 0.0, 0
    for i in range(1000):
        lam = (1.0, 1.5, 2.31)[i % 3]
        pts = random_separated(rng, int(rng.integers(2, 20)), k=2 + (i % 5 == 0))
        center = min_enclosing_ball(Configuration(pts, 1.0)).center
        frag, out = expand(pts, center, lam)
        worst = max(worst, float(np.abs(pairwise(out) - lam * pairwise(pts)).max()))
        inst = ProblemInstance.from_arrays(pts, out, 1.0, check=False)
        failures += not validate_plan(inst, as_plan(frag), clearance_tol=CLEARANCE_TOL).ok
    ok = worst <= 1e-9 and failures == 0
    record_acceptance(2, "expansion scales distances exactly", ok,
                      f"max error {worst:.2e}, {failures} invalid sub-plans")
    assert ok


def test_criterion_3_assignment_guarantees():
    rng = np.random.default_rng(3)
    problems = []
    for i in range(1000):
        kind = (HEX, SQUARE)[i % 2]
        el = default_edge_length(kind)
        n = int(rng.integers(2, 30))
        pts = random_separated(rng, n, min_dist=2.0 + rng.uniform(0, 1.5))
        center = min_enclosing_ball(Configuration(pts, 1.0)).center
        lam = resolve_lambda(pts, el)
        _, out = expand(pts, center, lam)
        cover = max(lam * np.linalg.norm(pts - center, axis=1).max(), el)
        grid = build_covering_grid(kind, el, center, cover)
        frag, v = assign(out, grid)
        seg = np.linalg.norm(grid.positions[v] - out, axis=1).max()
        report = validate_plan(ProblemInstance.from_arrays(out, grid.positions[v], 1.0, check=False),
                               as_plan(frag), clearance_tol=CLEARANCE_TOL)
        if len(set(v.tolist())) != n or seg > el + 1e-9 or not report.ok:
            problems.append(i)
    record_acceptance(3, "assignment injective, short and collision-free", not problems,
                      f"1000 configurations, {len(problems)} failures")
    assert not problems


def test_criterion_4_figure8_oracle_equivalence():
    failures, longest = [], {}
    for kind, ext in ((SQUARE, (2, 3)), (HEX, (6, 2))):
        g = make_grid(kind, ext)
        (cell,) = g.figure8_cells
        size = len(cell.vertices)
        tab = f8.group_table(size)
        bound = max(tab.distance(f8.swapped(size, [p])) for p in itertools.combinations(range(size), 2))
        longest[kind] = (0, bound)
        tokens = {v: i for i, v in enumerate(cell.vertices)}
        for a, b in itertools.combinations(cell.vertices, 2):
            rots = f8.swap_in_figure8(cell, a, b)
            after = dict(tokens)
            for cyc in rots:
                after.update({cyc[(j + 1) % len(cyc)]: after[u] for j, u in enumerate(cyc)})
            expected = {**tokens, a: tokens[b], b: tokens[a]}
            if after != expected or len(rots) > bound:
                failures.append((kind, a, b))
            longest[kind] = (max(longest[kind][0], len(rots)), bound)
    detail = ", ".join(f"{k}: longest {m} <= bound {b}" for k, (m, b) in longest.items())
    record_acceptance(4, "figure-8 swaps exchange exactly one pair", not failures, detail)
    assert not failures


def test_criterion_5_sag_against_optimal_oracle():
    sag = get_router("sag")
    rng = np.random.default_rng(5)
    grids = [make_grid(SQUARE, (2, 3)), make_grid(HEX, (6, 2)), make_grid(SQUARE, (4, 6)), make_grid(HEX, (10, 4))]
    ratios, bad = [], 0
    for i in range(100):
        g = grids[i % len(grids)]
        n = int(rng.integers(1, 5))
        inst = DiscreteInstance(g, rng.choice(g.n_vertices, n, replace=False),
                                rng.choice(g.n_vertices, n, replace=False))
        plan = sag(inst)
        check_plan(g, plan)
        opt = solve_optimal_bfs(inst)
        if not reaches_goal(inst, plan) or plan.n_steps < opt.n_steps:
            bad += 1
        if opt.n_steps:
            ratios.append(plan.n_steps / opt.n_steps)
    record_acceptance(5, "SAG valid and never shorter than the optimum", bad == 0,
                      f"mean ratio {np.mean(ratios):.2f}, max {np.max(ratios):.2f}")
    assert bad == 0


@pytest.fixture(scope="module")
def size_sweep():
    spec = SweepSpec.grid_of([25, 100, 225, 400], [0.0], [0.0], grids=(HEX,), reps=10)
    return run_sweep(spec, workers=1)


def test_criterion_6_makespan_grows_with_longer_side(size_sweep):
    assert all(row["complete"] for row in size_sweep)
    xs = [row["longer_side_mean"] for row in size_sweep]
    ys = [row["route_steps_mean"] for row in size_sweep]
    r2 = r_squared(xs, ys)
    ratio = {row["n"]: row["opt_ratio_mean"] for row in size_sweep}
    flat = ratio[400] / ratio[100]
    ok = r2 >= 0.9 and flat <= 2.0
    record_acceptance(6, "route steps linear in longer side, ratio flattens", ok,
                      f"R^2 {r2:.3f}, ratio(400)/ratio(100) {flat:.2f}")
    assert ok


def test_criterion_7_ratio_decreases_with_distance():
    rows = run_sweep(SweepSpec.grid_of([30], [0.0], [0.0, 20.0, 40.0, 60.0], reps=10))
    vals = [row["opt_ratio_mean"] for row in rows]
    ok = all(row["complete"] for row in rows) and all(a > b for a, b in zip(vals, vals[1:]))
    record_acceptance(7, "ratio strictly decreasing in d", ok, " > ".join(f"{v:.1f}" for v in vals))
    assert ok


def test_criterion_8_ratio_and_lambda_fall_with_gap():
    rows = run_sweep(SweepSpec.grid_of([30], [0.0, 1.0, 2.0, 2.6, 2.62], [0.0], reps=10))
    ratios = [row["opt_ratio_mean"] for row in rows[:4]]
    lams = [max(row["lambda_start_mean"], row["lambda_goal_mean"]) for row in rows]
    ok = (all(row["complete"] for row in rows)
          and all(a >= b for a, b in zip(ratios, ratios[1:]))
          and all(a >= b for a, b in zip(lams, lams[1:]))
          and lams[-1] == 1.0)
    record_acceptance(8, "ratio and lambda non-increasing in delta", ok,
                      f"ratios {[round(v, 1) for v in ratios]}, lambda {[round(v, 4) for v in lams]}")
    assert ok


def test_criterion_9_shift_arithmetic():
    start = np.array([[-3.0, 0.0], [0.0, 0.0], [3.0, 0.0]])
    inst = ProblemInstance.from_arrays(start, start + [10.0, 0.0], 1.0)
    frag, _ = shift(inst)
    total = sum(tr.length() for tr in frag.trajectories)
    ok = frag.duration == 10.0 and total == 30.0
    record_acceptance(9, "shift takes d time and n*d distance", ok, f"makespan {frag.duration}, distance {total}")
    assert ok


def test_criterion_10_throughput():
    inst = sample_instance(SamplerParams(n=1000, seed=0))
    tic = time.perf_counter()
    plan, trace, metrics = solve(inst)
    wall = time.perf_counter() - tic
    ok = trace.report.ok
    record_acceptance(10, "n=1000 completes", ok,
                      f"wall {wall:.1f} s (target < 300 s, informational), ratio {metrics.optimality_ratio:.1f}")
    assert ok
