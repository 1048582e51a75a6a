"""Discrete instances and plans on a lattice, the plan simulator, conversion
to continuous motion, the router registry and the exhaustive-search oracle."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .core import ContractError, SearError, Trajectory, clearance_report
from .grid import GridGraph


class RoutingError(SearError, RuntimeError):
    """A router failed; ``instance`` holds the discrete problem for reproduction."""

    def __init__(self, message: str, instance: "DiscreteInstance | None" = None):
        super().__init__(message)
        self.instance = instance


class InvalidDiscretePlanError(SearError, ValueError):
    pass


class OracleTooLargeError(SearError, RuntimeError):
    pass


class ConversionError(SearError, RuntimeError):
    pass


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    grid: GridGraph
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.start, dtype=np.int64).reshape(-1)
        g = np.asarray(self.goal, dtype=np.int64).reshape(-1)
        if s.shape != g.shape:
            raise ContractError("start and goal injections differ in length")
        nv = self.grid.n_vertices
        for name, arr in (("start", s), ("goal", g)):
            if arr.size and (arr.min() < 0 or arr.max() >= nv):
                raise ContractError(f"{name} injection leaves the grid")
            if np.unique(arr).size != arr.size:
                raise ContractError(f"{name} injection is not injective")
        s.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "goal", g)

    @property
    def n(self) -> int:
        return self.start.shape[0]

    def to_json(self) -> dict:
        return {"grid": self.grid.descriptor(), "start": self.start.tolist(), "goal": self.goal.tolist()}


@dataclass(frozen=True, eq=False)
class PaddedInstance:
    """Fully occupied view of a discrete instance.

    ``occupancy[v]`` is the real robot on vertex ``v`` or ``-1 - j`` for the
    ``j``-th virtual robot.  Virtual robots may finish on any vertex that no
    real robot claims.
    """

    instance: DiscreteInstance
    occupancy: np.ndarray

    @property
    def n_virtual(self) -> int:
        return int((self.occupancy < 0).sum())

    @property
    def free_goals(self) -> np.ndarray:
        mask = np.ones(self.instance.grid.n_vertices, dtype=bool)
        mask[self.instance.goal] = False
        return np.flatnonzero(mask)


def pad_with_virtual_robots(instance: DiscreteInstance) -> PaddedInstance:
    occ = np.full(instance.grid.n_vertices, -1, dtype=np.int64)
    occ[instance.start] = np.arange(instance.n)
    empty = np.flatnonzero(occ < 0)
    occ[empty] = -1 - np.arange(empty.size)
    return PaddedInstance(instance, occ)


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscretePlan:
    """Parallel steps of vertex-disjoint rotations, stored flat.

    Rotation ``c`` is the directed vertex cycle
    ``cycle_vertices[cycle_offsets[c]:cycle_offsets[c + 1]]``; the token on
    each listed vertex moves to the next one (the last wraps to the first).
    Step ``s`` holds rotations ``step_offsets[s]:step_offsets[s + 1]``.
    """

    cycle_vertices: np.ndarray
    cycle_offsets: np.ndarray
    step_offsets: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.step_offsets.shape[0] - 1

    @property
    def n_rotations(self) -> int:
        return self.cycle_offsets.shape[0] - 1

    def __len__(self) -> int:
        return self.n_steps

    def step(self, s: int) -> list[tuple]:
        out = []
        for c in range(self.step_offsets[s], self.step_offsets[s + 1]):
            out.append(tuple(int(v) for v in self.cycle_vertices[self.cycle_offsets[c]:self.cycle_offsets[c + 1]]))
        return out

    @classmethod
    def empty(cls) -> "DiscretePlan":
        z = np.zeros(1, dtype=np.int64)
        return cls(np.zeros(0, dtype=np.int64), z, z.copy())

    @classmethod
    def from_steps(cls, steps) -> "DiscretePlan":
        b = PlanBuilder()
        for step in steps:
            if step:
                b.add_cycles(list(step))
        return b.build()

    def successor_vertices(self) -> np.ndarray:
        """Where the token on each entry of ``cycle_vertices`` goes."""
        cv = self.cycle_vertices
        nxt = np.empty_like(cv)
        if cv.size == 0:
            return nxt
        nxt[:-1] = cv[1:]
        nxt[self.cycle_offsets[1:] - 1] = cv[self.cycle_offsets[:-1]]
        return nxt

    def real_moves(self, start: np.ndarray, n_vertices: int):
        """Yield ``(robots, from, to)`` arrays per step for the given start injection."""
        occ = np.full(n_vertices, -1, dtype=np.int64)
        occ[start] = np.arange(len(start))
        nxt = self.successor_vertices()
        for s in range(self.n_steps):
            a = self.cycle_offsets[self.step_offsets[s]]
            b = self.cycle_offsets[self.step_offsets[s + 1]]
            src = self.cycle_vertices[a:b]
            dst = nxt[a:b]
            robots = occ[src]
            moving = robots >= 0
            occ[src] = -1
            occ[dst[moving]] = robots[moving]
            yield robots[moving], src[moving], dst[moving]

    def to_json(self, instance: DiscreteInstance | None = None) -> dict:
        rot = []
        for s in range(self.n_steps):
            rot.append([list(c) for c in self.step(s)])
        out = {"n_steps": self.n_steps, "rotations": rot}
        if instance is not None:
            out["steps"] = [np.stack([r, f, t], axis=1).tolist()
                            for r, f, t in self.real_moves(instance.start, instance.grid.n_vertices)]
        return out


class PlanBuilder:
    """Accumulates steps of rotations into a :class:`DiscretePlan`."""

    def __init__(self):
        self._verts: list[np.ndarray] = []
        self._lens: list[np.ndarray] = []
        self._steps: list[int] = []

    def add_step(self, vertices: np.ndarray, lengths: np.ndarray) -> None:
        """Append one step given concatenated cycles and their lengths."""
        lengths = np.asarray(lengths, dtype=np.int64)
        if lengths.size == 0:
            return
        self._verts.append(np.asarray(vertices, dtype=np.int64))
        self._lens.append(lengths)
        self._steps.append(lengths.size)

    def add_cycles(self, cycles) -> None:
        if not cycles:
            return
        self.add_step(np.concatenate([np.asarray(c, dtype=np.int64) for c in cycles]),
                      np.array([len(c) for c in cycles]))

    def extend(self, plan: DiscretePlan) -> None:
        for s in range(plan.n_steps):
            a, b = plan.step_offsets[s], plan.step_offsets[s + 1]
            va, vb = plan.cycle_offsets[a], plan.cycle_offsets[b]
            self.add_step(plan.cycle_vertices[va:vb], np.diff(plan.cycle_offsets[a:b + 1]))

    @property
    def n_steps(self) -> int:
        return len(self._steps)

    def build(self, meta: dict | None = None) -> DiscretePlan:
        if not self._steps:
            plan = DiscretePlan.empty()
            return DiscretePlan(plan.cycle_vertices, plan.cycle_offsets, plan.step_offsets, dict(meta or {}))
        verts = np.concatenate(self._verts)
        lens = np.concatenate(self._lens)
        coff = np.zeros(lens.size + 1, dtype=np.int64)
        np.cumsum(lens, out=coff[1:])
        soff = np.zeros(len(self._steps) + 1, dtype=np.int64)
        np.cumsum(self._steps, out=soff[1:])
        return DiscretePlan(verts, coff, soff, dict(meta or {}))


def compact_plan(plan: DiscretePlan, n_vertices: int) -> DiscretePlan:
    """Pull every rotation into the earliest step that keeps overlapping
    rotations in their original order; the final arrangement is unchanged."""
    if plan.n_rotations == 0:
        return plan
    level = kernels.asap_levels(plan.cycle_vertices, plan.cycle_offsets, plan.step_offsets, n_vertices)
    order = np.argsort(level, kind="stable")
    lens = np.diff(plan.cycle_offsets)
    starts = plan.cycle_offsets[:-1][order]
    idx = np.repeat(starts - np.concatenate([[0], np.cumsum(lens[order])[:-1]]), lens[order])
    verts = plan.cycle_vertices[np.arange(idx.size) + idx]
    coff = np.zeros(lens.size + 1, dtype=np.int64)
    np.cumsum(lens[order], out=coff[1:])
    soff = np.searchsorted(level[order], np.arange(int(level.max()) + 2), side="left").astype(np.int64)
    return DiscretePlan(verts, coff, soff, dict(plan.meta))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _cycle_keys(plan: DiscretePlan, length: int, sel: np.ndarray) -> np.ndarray:
    starts = plan.cycle_offsets[:-1][sel]
    rows = plan.cycle_vertices[starts[:, None] + np.arange(length)[None, :]]
    rows.sort(axis=1)
    return rows


def check_plan(grid: GridGraph, plan: DiscretePlan) -> None:
    """Raise :class:`InvalidDiscretePlanError` unless every step is a set of
    vertex-disjoint rotations of faces or figure-8 outer boundaries."""
    cv = plan.cycle_vertices
    if cv.size == 0:
        return
    nv = grid.n_vertices
    if cv.min() < 0 or cv.max() >= nv:
        raise InvalidDiscretePlanError("rotation leaves the grid")
    nxt = plan.successor_vertices()
    e = grid.edges
    keys = np.sort(e[:, 0] * nv + e[:, 1])
    lo, hi = np.minimum(cv, nxt), np.maximum(cv, nxt)
    q = lo * nv + hi
    pos = np.searchsorted(keys, q)
    ok = (pos < keys.size) & (keys[np.minimum(pos, keys.size - 1)] == q)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise InvalidDiscretePlanError(f"move {int(cv[bad])}->{int(nxt[bad])} does not follow an edge")
    # disjointness inside each step
    step_of_cycle = np.repeat(np.arange(plan.n_steps), np.diff(plan.step_offsets))
    step_of_entry = np.repeat(step_of_cycle, np.diff(plan.cycle_offsets))
    key = step_of_entry * nv + cv
    if np.unique(key).size != key.size:
        raise InvalidDiscretePlanError("rotations within a step share a vertex")
    # every cycle must be a face or a figure-8 boundary
    lens = np.diff(plan.cycle_offsets)
    allowed: dict[int, set] = {}
    for cyc in grid.rotation_cycles:
        allowed.setdefault(len(cyc), set()).add(tuple(sorted(cyc)))
    for length in np.unique(lens):
        if int(length) not in allowed:
            raise InvalidDiscretePlanError(f"no rotation cycle has length {int(length)}")
        rows = _cycle_keys(plan, int(length), lens == length)
        ref = np.array(sorted(allowed[int(length)]), dtype=np.int64)
        rv = np.ascontiguousarray(rows).view([("", np.int64)] * int(length)).reshape(-1)
        fv = np.ascontiguousarray(ref).view([("", np.int64)] * int(length)).reshape(-1)
        if not np.isin(rv, fv).all():
            raise InvalidDiscretePlanError("a rotation is neither a face nor a figure-8 boundary")


def simulate(instance: DiscreteInstance, plan: DiscretePlan, check: bool = True) -> np.ndarray:
    """Final vertex of every real robot after executing ``plan``.

    Virtual robots fill all other vertices, so every rotation is legal on a
    fully occupied grid once :func:`check_plan` passes.
    """
    if check:
        check_plan(instance.grid, plan)
    pos = np.array(instance.start, dtype=np.int64)
    for robots, _, to in plan.real_moves(instance.start, instance.grid.n_vertices):
        pos[robots] = to
    return pos


def reaches_goal(instance: DiscreteInstance, plan: DiscretePlan, check: bool = True) -> bool:
    return bool(np.array_equal(simulate(instance, plan, check), instance.goal))


# ---------------------------------------------------------------------------
# continuous realisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Fragment:
    """Per-robot waypoints on ``[0, duration]``; each robot starts at ``t = 0``."""

    trajectories: tuple
    duration: float
    info: dict = field(default_factory=dict)

    def reversed(self) -> "Fragment":
        out = []
        for tr in self.trajectories:
            t = self.duration - tr.times[::-1]
            p = tr.points[::-1]
            if t[0] > 0:
                t = np.concatenate([[0.0], t])
                p = np.concatenate([p[:1], p])
            out.append(Trajectory(t, p))
        return Fragment(tuple(out), self.duration, dict(self.info))


def _moves_to_fragment(points_start: np.ndarray, positions: np.ndarray, robots, steps, src, dst,
                       step_time: float, n_slots: int) -> Fragment:
    n = points_start.shape[0]
    robots = np.asarray(robots, dtype=np.int64)
    steps = np.asarray(steps, dtype=np.int64)
    order = np.lexsort((steps, robots))
    robots, steps, src, dst = robots[order], steps[order], np.asarray(src)[order], np.asarray(dst)[order]
    # two waypoints per move: depart and arrive
    t = np.stack([steps * step_time, (steps + 1) * step_time], axis=1).reshape(-1)
    v = np.stack([src, dst], axis=1).reshape(-1)
    rr = np.repeat(robots, 2)
    counts = np.bincount(rr, minlength=n)
    offs = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offs[1:])
    trajs = []
    for i in range(n):
        ti = t[offs[i]:offs[i + 1]]
        pi = positions[v[offs[i]:offs[i + 1]]] if counts[i] else np.zeros((0, points_start.shape[1]))
        ti = np.concatenate([[0.0], ti])
        pi = np.concatenate([points_start[i:i + 1], pi])
        keep = np.concatenate([[True], np.diff(ti) > 0])
        trajs.append(Trajectory(ti[keep], pi[keep]))
    return Fragment(tuple(trajs), n_slots * step_time)


def _serialize_step(grid: GridGraph, cycles: list[tuple]) -> list[list[tuple]]:
    """Split a step into groups whose rotations touch no common edge.

    Greedy colouring in cycle order: a rotation joins the first group that has
    no vertex adjacent to or shared with it.
    """
    groups: list[list[tuple]] = []
    marks: list[set] = []
    for cyc in cycles:
        halo = set(cyc)
        for v in cyc:
            halo.update(int(u) for u in grid.neighbors(v))
        for g, m in zip(groups, marks):
            if not (halo & m):
                g.append(cyc)
                m.update(cyc)
                break
        else:
            groups.append([cyc])
            marks.append(set(cyc))
    return groups


def discrete_to_continuous(plan: DiscretePlan, instance: DiscreteInstance, speed: float = 1.0,
                           radius: float | None = None, clearance_tol: float | None = None) -> Fragment:
    """Execute each step as a straight move along grid edges lasting ``l/speed``.

    When ``radius`` is given the fragment is checked for continuous clearance;
    offending steps are split into sub-steps of mutually non-adjacent
    rotations (a deterministic greedy order) and the check repeats.  The
    number of split steps is reported in ``info["serialized_steps"]``.
    """
    grid = instance.grid
    step_time = grid.edge_length / speed
    start_pts = grid.positions[instance.start]
    serialized = 0
    current = plan
    for _attempt in range(3):
        rob, stp, src, dst = [], [], [], []
        for s, (r, f, t) in enumerate(current.real_moves(instance.start, grid.n_vertices)):
            rob.append(r)
            stp.append(np.full(r.shape[0], s))
            src.append(f)
            dst.append(t)
        if rob:
            frag = _moves_to_fragment(start_pts, grid.positions, np.concatenate(rob), np.concatenate(stp),
                                      np.concatenate(src), np.concatenate(dst), step_time, current.n_steps)
        else:
            frag = Fragment(tuple(Trajectory(np.zeros(1), p[None, :]) for p in start_pts), 0.0)
        if radius is None or instance.n < 2:
            break
        tol = 1e-6 * radius if clearance_tol is None else clearance_tol
        vt, *_rest = clearance_report(frag.trajectories, radius, tol, frag.duration)
        if len(vt) == 0:
            break
        bad_steps = set(np.floor(np.asarray(vt) / step_time - 1e-9).astype(int).clip(0, current.n_steps - 1).tolist())
        b = PlanBuilder()
        for s in range(current.n_steps):
            cycles = current.step(s)
            if s in bad_steps and len(cycles) > 1:
                serialized += 1
                for group in _serialize_step(grid, cycles):
                    b.add_cycles(group)
            else:
                b.add_cycles(cycles)
        nxt = b.build(current.meta)
        if nxt.n_steps == current.n_steps:
            raise ConversionError("clearance violated inside a single rotation; edge length too short")
        current = nxt
    else:
        raise ConversionError("clearance still violated after serialising steps")
    info = {"serialized_steps": serialized, "discrete_steps": current.n_steps}
    return Fragment(frag.trajectories, frag.duration, info)


# ---------------------------------------------------------------------------
# router registry
# ---------------------------------------------------------------------------

Router = Callable[[DiscreteInstance], DiscretePlan]
_ROUTERS: dict[str, Router] = {}


def register_router(name: str):
    def deco(fn: Router) -> Router:
        _ROUTERS[name] = fn
        return fn
    return deco


def get_router(name: str) -> Router:
    from . import sag  # noqa: F401  (registers "sag")
    try:
        return _ROUTERS[name]
    except KeyError:
        raise ContractError(f"unknown router {name!r}; known: {sorted(_ROUTERS)}") from None


def router_names() -> list[str]:
    from . import sag  # noqa: F401
    return sorted(_ROUTERS)


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


class _RotationIndex:
    def __init__(self, grid: GridGraph):
        base = {tuple(f) for f in grid.faces.tolist()}
        base.update(c.outer_cycle for c in grid.figure8_cells)
        directed = []
        for cyc in sorted(base):
            directed.append(cyc)
            directed.append((cyc[0],) + tuple(reversed(cyc[1:])))
        self.cycles = directed
        self.vsets = [frozenset(c) for c in directed]
        self.succ = [dict(zip(c, c[1:] + c[:1])) for c in directed]
        self.by_edge: dict[tuple, list[int]] = {}
        for ci, c in enumerate(directed):
            for u, w in zip(c, c[1:] + c[:1]):
                self.by_edge.setdefault((u, w), []).append(ci)


def _realize(index: _RotationIndex, cur: tuple, nxt: tuple):
    """Disjoint directed cycles turning configuration ``cur`` into ``nxt``, or None."""
    where = {v: i for i, v in enumerate(cur)}
    stay = {cur[i] for i in range(len(cur)) if cur[i] == nxt[i]}
    movers = [i for i in range(len(cur)) if cur[i] != nxt[i]]

    def rec(k, used, chosen, covered):
        while k < len(movers) and movers[k] in covered:
            k += 1
        if k == len(movers):
            return list(chosen)
        i = movers[k]
        for ci in index.by_edge.get((cur[i], nxt[i]), ()):
            if not (used.isdisjoint(index.vsets[ci]) and stay.isdisjoint(index.vsets[ci])):
                continue
            succ = index.succ[ci]
            newly = []
            for v in index.cycles[ci]:
                j = where.get(v)
                if j is not None:
                    if nxt[j] != succ[v]:
                        break
                    newly.append(j)
            else:
                res = rec(k + 1, used | index.vsets[ci], chosen + [index.cycles[ci]], covered | set(newly))
                if res is not None:
                    return res
        return None

    return rec(0, frozenset(), [], frozenset())


def _graph_distances(grid: GridGraph, targets) -> np.ndarray:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path
    e = grid.edges
    nv = grid.n_vertices
    m = csr_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(nv, nv))
    return shortest_path(m, unweighted=True, indices=np.asarray(targets))


def solve_optimal_bfs(instance: DiscreteInstance, max_states: int = 200_000) -> DiscretePlan:
    """Minimum-step plan by best-first search over joint configurations.

    A step is any set of vertex-disjoint rotations (faces or figure-8
    boundaries).  Only real robots are tracked: each step moves every robot
    by at most one edge, and a candidate successor is kept when some set of
    disjoint rotations realises it.  The largest remaining graph distance is
    an admissible, consistent heuristic, so the first time the goal is popped
    the step count is optimal (the search is breadth-first in ``g`` when the
    heuristic is zero).
    """
    grid = instance.grid
    start = tuple(int(v) for v in instance.start)
    goal = tuple(int(v) for v in instance.goal)
    if start == goal:
        return DiscretePlan.empty()
    index = _RotationIndex(grid)
    dist = _graph_distances(grid, list(goal)) if goal else np.zeros((0, grid.n_vertices))

    def h(cfg):
        return int(max(dist[i, v] for i, v in enumerate(cfg)))

    options = {}

    def opts(v):
        if v not in options:
            options[v] = (v,) + tuple(int(u) for u in grid.neighbors(v))
        return options[v]

    parent = {start: None}
    gcost = {start: 0}
    heap = [(h(start), 0, 0, start)]
    tie = itertools.count(1)
    while heap:
        f, g, _, cur = heapq.heappop(heap)
        if cur == goal:
            break
        if g > gcost[cur]:
            continue
        for cand in itertools.product(*(opts(v) for v in cur)):
            if cand == cur or len(set(cand)) != len(cand):
                continue
            if cand in gcost and gcost[cand] <= g + 1:
                continue
            if _realize(index, cur, cand) is None:
                continue
            gcost[cand] = g + 1
            parent[cand] = cur
            if len(gcost) > max_states:
                raise OracleTooLargeError(f"search exceeded {max_states} states")
            heapq.heappush(heap, (g + 1 + h(cand), g + 1, next(tie), cand))
    else:
        raise RoutingError("goal configuration is unreachable", instance)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()
    b = PlanBuilder()
    for a, c in zip(path, path[1:]):
        b.add_cycles(_realize(index, a, c))
    return b.build({"router": "bfs-oracle"})


register_router("bfs-oracle")(solve_optimal_bfs)
