"""Continuous planning by shifting, expanding onto a lattice, routing and contracting.

A plan is the concatenation of five sequential phases:

1. ``shift``: translate everyone so the start and goal enclosing balls share a center;
2. ``expand``: scale the start configuration about that center by ``lambda_start``;
3. ``assign``: move each robot straight to its nearest lattice vertex;
4. ``route``: solve the discrete problem on the lattice and execute it along edges;
5. ``contract``: the goal-side expand and assign played backwards.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (ContractError, Metrics, Plan, ProblemInstance, SearError, Trajectory,
                   ValidationReport, evaluate_metrics, validate_plan)
from .geometry import min_enclosing_ball, min_pairwise_distance
from .grid import CUBE, HEX, SQUARE, GridGraph, build_covering_grid, default_edge_length, \
    edge_length_bound, lattice_dim
from .routing import (DiscreteInstance, DiscretePlan, Fragment, RoutingError, discrete_to_continuous,
                      get_router)

PHASES = ("shift", "expand", "assign", "route", "contract")


class AssignmentConflictError(SearError, RuntimeError):
    """Two robots snapped to the same vertex; the expansion factor was too small."""


class PlanValidationError(SearError, RuntimeError):
    def __init__(self, message: str, report: ValidationReport):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class PipelineConfig:
    grid: str = HEX
    edge_length: float | None = None
    lam: float | str = "auto"  # "auto" or a fixed factor >= 1 used on both sides
    speed: float = 1.0
    clearance_tol: float | None = None
    router: str = "sag"
    validate: bool = True

    def __post_init__(self):
        if self.grid not in (HEX, SQUARE, CUBE):
            raise ContractError(f"unknown grid kind {self.grid!r}")
        if self.speed != 1.0:
            raise ContractError("robots move at unit speed")
        if self.lam != "auto" and not (isinstance(self.lam, (int, float)) and self.lam >= 1.0):
            raise ContractError("lam must be 'auto' or a number >= 1")

    def resolved_edge_length(self, radius: float) -> float:
        if self.edge_length is None:
            return default_edge_length(self.grid, radius)
        bound = edge_length_bound(self.grid, radius)
        if self.edge_length < bound * (1.0 - 1e-12):
            raise ContractError(f"edge length {self.edge_length} below the {self.grid} bound {bound:.6g}")
        return float(self.edge_length)


@dataclass
class PipelineTrace:
    phases: list = field(default_factory=list)  # (name, t0, t1)
    lambda_start: float = 1.0
    lambda_goal: float = 1.0
    grid: GridGraph | None = None
    start_vertices: np.ndarray | None = None
    goal_vertices: np.ndarray | None = None
    router: str = ""
    discrete_steps: int = 0
    serialized_steps: int = 0
    report: ValidationReport | None = None

    def interval(self, name: str) -> tuple[float, float]:
        for n, t0, t1 in self.phases:
            if n == name:
                return t0, t1
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "phases": [{"name": n, "start": t0, "end": t1} for n, t0, t1 in self.phases],
            "lambda_start": self.lambda_start,
            "lambda_goal": self.lambda_goal,
            "grid": None if self.grid is None else self.grid.descriptor(),
            "start_vertices": None if self.start_vertices is None else self.start_vertices.tolist(),
            "goal_vertices": None if self.goal_vertices is None else self.goal_vertices.tolist(),
            "router": self.router,
            "discrete_steps": self.discrete_steps,
            "serialized_steps": self.serialized_steps,
        }


# ---------------------------------------------------------------------------
# fragments
# ---------------------------------------------------------------------------


def _still(points: np.ndarray) -> Fragment:
    return Fragment(tuple(Trajectory(np.zeros(1), p[None, :]) for p in points), 0.0)


def _straight_moves(src: np.ndarray, dst: np.ndarray, speed: float = 1.0) -> Fragment:
    """Everyone leaves at t = 0 and travels straight to ``dst``, stopping on arrival."""
    dist = np.linalg.norm(dst - src, axis=1)
    trajs = []
    for a, b, dd in zip(src, dst, dist):
        if dd > 0:
            trajs.append(Trajectory(np.array([0.0, dd / speed]), np.stack([a, b])))
        else:
            trajs.append(Trajectory(np.zeros(1), a[None, :]))
    return Fragment(tuple(trajs), float(dist.max(initial=0.0)) / speed)


def concat_fragments(fragments) -> Fragment:
    """Play fragments one after another."""
    fragments = list(fragments)
    n = len(fragments[0].trajectories)
    out_t = [[] for _ in range(n)]
    out_p = [[] for _ in range(n)]
    t0 = 0.0
    for frag in fragments:
        for i, tr in enumerate(frag.trajectories):
            t = tr.times + t0
            p = tr.points
            if out_t[i]:
                # a robot that stopped a hair before the boundary is already there
                last = out_t[i][-1][-1]
                drop = np.searchsorted(t, last + 1e-9 * max(1.0, abs(last)), side="right")
                t, p = t[drop:], p[drop:]
            if t.size:
                out_t[i].append(t)
                out_p[i].append(p)
        t0 += frag.duration
    trajs = []
    for ts, ps in zip(out_t, out_p):
        t, p = np.concatenate(ts), np.concatenate(ps)
        # offsets can round distinct waypoint times together; keep the later one
        keep = np.append(np.diff(t) > 1e-9 * np.maximum(1.0, np.abs(t[1:])), True)
        trajs.append(Trajectory(t[keep], p[keep]))
    trajs = tuple(trajs)
    return Fragment(trajs, t0)


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


def shift(instance: ProblemInstance) -> tuple[Fragment, ProblemInstance]:
    """Translate the start configuration onto the goal's enclosing-ball center."""
    start = instance.start.positions
    v = min_enclosing_ball(instance.goal).center - min_enclosing_ball(instance.start).center
    d = float(np.linalg.norm(v))
    shifted = ProblemInstance.from_arrays(start + v, instance.goal.positions, instance.radius,
                                          instance.meta, check=False)
    if d == 0.0:
        return _still(start), shifted
    trajs = tuple(Trajectory(np.array([0.0, d]), np.stack([p, p + v])) for p in start)
    return Fragment(trajs, d), shifted


def resolve_lambda(positions: np.ndarray, edge_length: float) -> float:
    """Smallest expansion that puts every pair at least two edge lengths apart."""
    if positions.shape[0] < 2:
        return 1.0
    return max(1.0, 2.0 * edge_length / min_pairwise_distance(positions))


def expand(positions: np.ndarray, center: np.ndarray, lam: float) -> tuple[Fragment, np.ndarray]:
    """Radial scaling about ``center`` at unit speed, all robots starting together."""
    if lam < 1.0:
        raise ContractError("expansion factor must be at least 1")
    pts = np.asarray(positions, dtype=np.float64)
    out = center + lam * (pts - center)
    if lam == 1.0:
        return _still(pts), pts.copy()
    return _straight_moves(pts, out), out


def assign(positions: np.ndarray, grid: GridGraph) -> tuple[Fragment, np.ndarray]:
    """Send every robot to its nearest vertex; the mapping must be injective."""
    verts = grid.nearest_vertices(positions)
    uniq, counts = np.unique(verts, return_counts=True)
    if np.any(counts > 1):
        clash = uniq[counts > 1][0]
        robots = np.flatnonzero(verts == clash).tolist()
        raise AssignmentConflictError(f"robots {robots} both snap to vertex {int(clash)}")
    return _straight_moves(positions, grid.positions[verts]), verts


def _side(positions, center, lam, grid):
    frag_e, expanded = expand(positions, center, lam)
    frag_a, verts = assign(expanded, grid)
    return concat_fragments([frag_e, frag_a]), verts


def _cover_radius(positions: np.ndarray, center: np.ndarray, lam: float) -> float:
    return lam * float(np.linalg.norm(positions - center, axis=1).max(initial=0.0))


def solve(instance: ProblemInstance, config: PipelineConfig | None = None,
          router: str | None = None) -> tuple[Plan, PipelineTrace, Metrics]:
    config = config or PipelineConfig()
    tic = time.perf_counter()
    if lattice_dim(config.grid) != instance.dim:
        raise ContractError(f"{config.grid} grid cannot hold {instance.dim}-dimensional robots")
    r = instance.radius
    el = config.resolved_edge_length(r)
    trace = PipelineTrace(router=router or config.router)

    frag_shift, shifted = shift(instance)
    start, goal = shifted.start.positions, shifted.goal.positions
    center = min_enclosing_ball(shifted.goal).center
    if config.lam == "auto":
        lam_s, lam_g = resolve_lambda(start, el), resolve_lambda(goal, el)
    else:
        lam_s = lam_g = float(config.lam)
    trace.lambda_start, trace.lambda_goal = lam_s, lam_g
    cover = max(_cover_radius(start, center, lam_s), _cover_radius(goal, center, lam_g), el)
    grid = build_covering_grid(config.grid, el, center, cover, radius=r)
    trace.grid = grid

    frag_start, vs = _side(start, center, lam_s, grid)
    frag_goal, vg = _side(goal, center, lam_g, grid)
    trace.start_vertices, trace.goal_vertices = vs, vg

    dinst = DiscreteInstance(grid, vs, vg)
    solver = get_router(trace.router)
    try:
        dplan = DiscretePlan.empty() if np.array_equal(vs, vg) else solver(dinst)
    except RoutingError as exc:
        if exc.instance is None:
            exc.instance = dinst
        raise
    except SearError:
        raise
    except Exception as exc:  # a plugged-in router failing in its own way
        raise RoutingError(f"router {trace.router!r} failed: {exc}", dinst) from exc
    frag_route = discrete_to_continuous(dplan, dinst, config.speed, radius=r,
                                        clearance_tol=config.clearance_tol)
    trace.discrete_steps = int(frag_route.info.get("discrete_steps", dplan.n_steps))
    trace.serialized_steps = int(frag_route.info.get("serialized_steps", 0))

    contract = frag_goal.reversed()
    t_expand = expand(start, center, lam_s)[0].duration
    durations = (frag_shift.duration, t_expand, frag_start.duration - t_expand,
                 frag_route.duration, contract.duration)
    bounds = np.concatenate([[0.0], np.cumsum(durations)])
    trace.phases = [(name, float(bounds[i]), float(bounds[i + 1])) for i, name in enumerate(PHASES)]
    whole = concat_fragments([frag_shift, frag_start, frag_route, contract])
    plan = Plan(whole.trajectories, whole.duration)
    if config.validate:
        report = validate_plan(instance, plan, config.clearance_tol)
        trace.report = report
        if not report.ok:
            raise PlanValidationError(f"emitted plan is invalid: {report.summary()}", report)
    metrics = evaluate_metrics(instance, plan, time.perf_counter() - tic)
    return plan, trace, metrics


def phase_fragment(plan: Plan, trace: PipelineTrace, name: str) -> Plan:
    """Restriction of ``plan`` to one phase, re-timed to start at zero."""
    t0, t1 = trace.interval(name)
    trajs = []
    for tr in plan.trajectories:
        inner = tr.times[(tr.times > t0) & (tr.times < t1)]
        ts = np.concatenate([[t0], inner, [t1]]) if t1 > t0 else np.array([t0])
        pts = np.array([tr.at(x) for x in ts])
        trajs.append(Trajectory(ts - t0, pts))
    return Plan(tuple(trajs), t1 - t0)

