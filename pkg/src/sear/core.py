"""Domain types, plan validation and metrics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

SPEED_SLACK = 1e-9
ENDPOINT_TOL = 1e-9
MAX_REPORTED_VIOLATIONS = 100


class SearError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(SearError, ValueError):
    """An operation was called with arguments that break its precondition."""


class MalformedPlanError(SearError, ValueError):
    pass


class SchemaError(SearError, ValueError):
    """Input JSON does not match the expected layout."""


# ---------------------------------------------------------------------------
# configurations and instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Configuration:
    positions: np.ndarray
    radius: float

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise ContractError(f"positions must be an (n, 2) or (n, 3) array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ContractError("positions must be finite")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ContractError("radius must be positive and finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def check_separation(self) -> None:
        """Raise if two centers are not strictly more than 2r apart."""
        if self.n < 2:
            return
        from .geometry import min_pairwise_distance
        d = min_pairwise_distance(self)
        if not d > 2 * self.radius:
            raise ContractError(f"robots overlap: min center distance {d!r} <= 2r = {2 * self.radius!r}")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    start: Configuration
    goal: Configuration
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.start.n != self.goal.n:
            raise ContractError("start and goal robot counts differ")
        if self.start.dim != self.goal.dim:
            raise ContractError("start and goal dimensions differ")
        if self.start.radius != self.goal.radius:
            raise ContractError("start and goal radii differ")

    @classmethod
    def from_arrays(cls, start, goal, radius: float = 1.0, meta: dict | None = None,
                    check: bool = True) -> "ProblemInstance":
        inst = cls(Configuration(start, radius), Configuration(goal, radius), dict(meta or {}))
        if check:
            inst.start.check_separation()
            inst.goal.check_separation()
        return inst

    @property
    def n(self) -> int:
        return self.start.n

    @property
    def dim(self) -> int:
        return self.start.dim

    @property
    def radius(self) -> float:
        return self.start.radius

    def to_json(self) -> dict:
        meta = {key: self.meta.get(key) for key in ("seed", "delta", "d")}
        meta.update({key: v for key, v in self.meta.items() if key not in meta})
        return {
            "k": self.dim,
            "r": self.radius,
            "start": self.start.positions.tolist(),
            "goal": self.goal.positions.tolist(),
            "meta": meta,
        }

    @classmethod
    def from_json(cls, data: dict, check: bool = True) -> "ProblemInstance":
        try:
            k = int(data["k"])
            r = float(data["r"])
            start = np.asarray(data["start"], dtype=np.float64)
            goal = np.asarray(data["goal"], dtype=np.float64)
            meta = dict(data.get("meta") or {})
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad instance document: {exc}") from exc
        if start.ndim != 2 or goal.ndim != 2 or start.shape[1] != k or goal.shape[1] != k:
            raise SchemaError("start/goal must be lists of k-dimensional points")
        try:
            return cls.from_arrays(start, goal, r, meta, check=check)
        except ContractError as exc:
            raise SchemaError(str(exc)) from exc


@dataclass(frozen=True)
class EnclosingBall:
    center: np.ndarray
    radius: float


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-linear path: ``times`` strictly increasing, ``points`` (m, k)."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).reshape(-1)
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != t.shape[0] or t.shape[0] == 0:
            raise MalformedPlanError("trajectory needs matching, non-empty times and points")
        if np.any(np.diff(t) <= 0):
            raise MalformedPlanError("waypoint times must be strictly increasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    def at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.points[:, c]) for c in range(self.points.shape[1])])

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


@dataclass(frozen=True, eq=False)
class Plan:
    trajectories: tuple
    makespan: float

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "makespan", float(self.makespan))

    @property
    def n(self) -> int:
        return len(self.trajectories)

    def positions_at(self, t: float) -> np.ndarray:
        return np.array([tr.at(t) for tr in self.trajectories])

    def to_json(self) -> dict:
        robots = []
        for tr in self.trajectories:
            robots.append([[float(t), p.tolist()] for t, p in zip(tr.times, tr.points)])
        return {"makespan": self.makespan, "robots": robots}

    @classmethod
    def from_json(cls, data: dict) -> "Plan":
        try:
            trajs = []
            for robot in data["robots"]:
                times = [float(w[0]) for w in robot]
                pts = [list(map(float, w[1])) for w in robot]
                trajs.append(Trajectory(np.array(times), np.array(pts)))
            return cls(tuple(trajs), float(data["makespan"]))
        except MalformedPlanError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"bad plan document: {exc}") from exc


def stationary_plan(points: np.ndarray) -> Plan:
    return Plan(tuple(Trajectory(np.zeros(1), p[None, :]) for p in np.asarray(points, dtype=float)), 0.0)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "clearance", "speed", "start", "goal"
    time: float
    robots: tuple
    value: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "time": self.time, "robots": list(self.robots), "value": self.value}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple = ()
    violation_count: int = 0
    min_distance: float = math.inf
    min_distance_time: float = 0.0
    min_distance_pair: tuple = (-1, -1)

    @property
    def first(self) -> Violation | None:
        if not self.violations:
            return None
        return min(self.violations, key=lambda v: (v.time, v.robots))

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return f"ok (min pair distance {self.min_distance:.6g})"
        v = self.first
        return f"{self.violation_count} violation(s); first: {v.kind} at t={v.time:.6g} robots={v.robots} value={v.value:.6g}"

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violation_count": self.violation_count,
            "violations": [v.to_json() for v in self.violations],
            "min_distance": None if math.isinf(self.min_distance) else self.min_distance,
            "min_distance_time": self.min_distance_time,
            "min_distance_pair": list(self.min_distance_pair),
        }


def pack_trajectories(trajectories: Sequence[Trajectory]):
    """Concatenate trajectories into flat ``(times, points, offsets)`` arrays."""
    lens = np.array([len(tr.times) for tr in trajectories], dtype=np.int64)
    offs = np.zeros(len(trajectories) + 1, dtype=np.int64)
    np.cumsum(lens, out=offs[1:])
    if len(trajectories):
        times = np.concatenate([tr.times for tr in trajectories])
        pts = np.concatenate([tr.points for tr in trajectories])
    else:
        times = np.zeros(0)
        pts = np.zeros((0, 2))
    return times, pts, offs


def clearance_report(trajectories: Sequence[Trajectory], radius: float, clearance_tol: float,
                     horizon: float | None = None):
    """Run the continuous pairwise clearance scan; returns the raw kernel tuple."""
    times, pts, offs = pack_trajectories(trajectories)
    bounds = np.unique(np.concatenate([times, [0.0]] + ([[horizon]] if horizon is not None else [])))
    if bounds.shape[0] == 1:
        bounds = np.array([bounds[0], bounds[0]])
    thresh = 2.0 * radius - clearance_tol
    return kernels.clearance_scan(times, pts, offs, bounds, thresh, MAX_REPORTED_VIOLATIONS)


def validate_plan(instance: ProblemInstance, plan: Plan, clearance_tol: float | None = None) -> ValidationReport:
    """Check endpoints, the unit speed bound and continuous pairwise clearance.

    Clearance is exact: on every time slab between consecutive waypoint times
    each pair's separation is linear in time, so the minimum of the squared
    distance is found in closed form.
    """
    if plan.n != instance.n:
        raise ContractError(f"plan has {plan.n} robots, instance has {instance.n}")
    r = instance.radius
    if clearance_tol is None:
        clearance_tol = 1e-6 * r
    violations: list[Violation] = []
    count = 0
    for i, tr in enumerate(plan.trajectories):
        if tr.points.shape[1] != instance.dim:
            raise MalformedPlanError(f"robot {i} waypoints have wrong dimension")
        if np.any(np.diff(tr.times) <= 0):
            raise MalformedPlanError(f"robot {i} waypoint times are not strictly increasing")
        if tr.times[0] < -ENDPOINT_TOL or tr.times[-1] > plan.makespan + ENDPOINT_TOL:
            raise MalformedPlanError(f"robot {i} waypoints fall outside [0, T]")
        d0 = float(np.linalg.norm(tr.points[0] - instance.start.positions[i]))
        if d0 > ENDPOINT_TOL:
            count += 1
            violations.append(Violation("start", 0.0, (i,), d0))
        d1 = float(np.linalg.norm(tr.points[-1] - instance.goal.positions[i]))
        if d1 > ENDPOINT_TOL:
            count += 1
            violations.append(Violation("goal", plan.makespan, (i,), d1))
        if len(tr.times) > 1:
            seg = np.linalg.norm(np.diff(tr.points, axis=0), axis=1)
            dt = np.diff(tr.times)
            bad = np.flatnonzero(seg > dt * (1.0 + SPEED_SLACK) + 1e-12)
            count += int(bad.size)
            for b in bad[:MAX_REPORTED_VIOLATIONS]:
                violations.append(Violation("speed", float(tr.times[b]), (i,), float(seg[b] / dt[b])))
    vt, vi, vj, vd, nv, best_d, best_t, best_i, best_j = clearance_report(
        plan.trajectories, r, clearance_tol, plan.makespan)
    count += int(nv)
    for t, i, j, d in zip(vt, vi, vj, vd):
        violations.append(Violation("clearance", float(t), (int(i), int(j)), float(d)))
    violations.sort(key=lambda v: (v.time, v.robots))
    return ValidationReport(
        ok=count == 0,
        violations=tuple(violations[:MAX_REPORTED_VIOLATIONS]),
        violation_count=count,
        min_distance=float(best_d),
        min_distance_time=float(best_t),
        min_distance_pair=(int(best_i), int(best_j)),
    )


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    makespan: float
    total_distance: float
    max_single_distance: float
    lower_bound: float
    optimality_ratio: float | None
    wall_time_seconds: float

    def to_json(self) -> dict:
        return {
            "makespan": self.makespan,
            "total_distance": self.total_distance,
            "max_single_distance": self.max_single_distance,
            "lower_bound": self.lower_bound,
            "optimality_ratio": self.optimality_ratio,
            "wall_time_seconds": self.wall_time_seconds,
        }


def lower_bound(instance: ProblemInstance) -> float:
    if instance.n == 0:
        return 0.0
    return float(np.linalg.norm(instance.goal.positions - instance.start.positions, axis=1).max())


def evaluate_metrics(instance: ProblemInstance, plan: Plan, wall_time: float = 0.0) -> Metrics:
    lengths = np.array([tr.length() for tr in plan.trajectories]) if plan.n else np.zeros(1)
    lb = lower_bound(instance)
    ratio = plan.makespan / lb if lb > 1e-12 else None
    return Metrics(
        makespan=plan.makespan,
        total_distance=float(lengths.sum()),
        max_single_distance=float(lengths.max()),
        lower_bound=lb,
        optimality_ratio=ratio,
        wall_time_seconds=float(wall_time),
    )


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
