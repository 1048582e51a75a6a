"""SplitAndGroup routing on a fully occupied lattice.

The grid is padded with virtual robots and split recursively.  At each split
the robots in a box are grouped by the half that holds their goal: first a
*balance* pass along lines perpendicular to the split gives every line
through the box exactly as many low-side tokens as it has low-side sites,
then a stable odd-even transposition sort along the split axis moves them
across.  All boxes at the same depth move in lockstep.

Every round of the odd-even sorts is a set of disjoint adjacent
transpositions belonging to one *family* (edges along one axis with one
parity).  A per-family template covers those edges with vertex-disjoint
figure-8 cells in a few sub-rounds; inside a cell the product of its active
transpositions is realised by a shortest rotation word from the shipped
tables.  Rotations that would move only virtual robots are dropped and the
remaining rotations of each cell are packed to the front.

Hexagonal lattices sort along rows (zigzag paths) and along *snakes*: the
path through the column pair ``(2c, 2c+1)`` that alternates between the two
columns row by row.  The two missing corner sites of a hex grid stay in
place as fixed phantom tokens; the balance pass orders its work so that they
never need to move.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import figure8, kernels
from .grid import HEX, SQRT3, GridGraph
from .routing import (DiscreteInstance, DiscretePlan, PlanBuilder, RoutingError, compact_plan,
                      register_router)

VIRTUAL = -1
PHANTOM = -2

# ---------------------------------------------------------------------------
# lattice lines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def size(self) -> tuple:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.size))

    def split(self, axis: int, m: int) -> tuple["Box", "Box"]:
        hi1 = list(self.hi)
        lo2 = list(self.lo)
        hi1[axis] = m
        lo2[axis] = m
        return Box(self.lo, tuple(hi1)), Box(tuple(lo2), self.hi)


class Layout:
    """Site-level view of a grid: lines, line families and coordinates."""

    def __init__(self, grid: GridGraph):
        self.grid = grid
        self.kind = grid.kind
        self.extent = grid.extent
        self.dim = grid.dim
        self.strides = tuple(int(np.prod(self.extent[:a])) for a in range(self.dim))
        self.coords = grid.site_coords
        self.valid = grid.site_valid
        self.whole = Box((0,) * self.dim, tuple(self.extent))
        if self.kind == HEX:
            self.spacing = (SQRT3 / 2.0, 1.5)
        else:
            self.spacing = (1.0,) * self.dim

    def site(self, coord) -> int:
        return int(sum(int(c) * s for c, s in zip(coord, self.strides)))

    def lines(self, box: Box, axis: int):
        """Sites of every line along ``axis`` inside ``box``.

        Returns ``(lines, offset, bins)``: ``lines`` is (n_lines, length),
        ``offset`` is the global index of each line's first site (for family
        parity) and ``bins[i, j]`` is the coordinate that labels site ``j``
        when the line is used for balancing.
        """
        lo, hi = box.lo, box.hi
        if self.kind == HEX and axis == 1:
            x0, x1 = lo[0], hi[0]
            y0, y1 = lo[1], hi[1]
            cols = np.arange(x0 // 2, x1 // 2)
            ys = np.arange(y0, y1)
            first = np.where(ys % 2 == 0, 1, 0)  # even rows enter at the right column
            xa = 2 * cols[:, None] + first[None, :]
            xb = 2 * cols[:, None] + (1 - first)[None, :]
            xs = np.stack([xa, xb], axis=2).reshape(len(cols), -1)
            yy = np.repeat(ys, 2)[None, :].repeat(len(cols), axis=0)
            sites = xs * self.strides[0] + yy * self.strides[1]
            offset = np.full(len(cols), 2 * y0)
            bins = yy - y0
            return sites, offset, bins
        others = [a for a in range(self.dim) if a != axis]
        grids = np.meshgrid(*[np.arange(lo[a], hi[a]) for a in others], indexing="ij")
        base = np.zeros(grids[0].shape if grids else (), dtype=np.int64)
        for a, g in zip(others, grids):
            base = base + g * self.strides[a]
        base = base.reshape(-1)
        along = np.arange(lo[axis], hi[axis])
        sites = base[:, None] + along[None, :] * self.strides[axis]
        offset = np.full(sites.shape[0], lo[axis])
        if self.kind == HEX:  # rows, binned by snake
            bins = np.broadcast_to(along // 2 - lo[0] // 2, sites.shape).copy()
        else:
            bins = np.broadcast_to(along - lo[axis], sites.shape).copy()
        return sites, offset, bins

    def family_edges(self, axis: int, parity: int) -> np.ndarray:
        """(E, 2) sites of family edges, first endpoint in line order."""
        lines, offset, _ = self.lines(self.whole, axis)
        i = np.arange(lines.shape[1] - 1)
        sel = (i[None, :] + offset[:, None]) % 2 == parity
        a = lines[:, :-1][sel]
        b = lines[:, 1:][sel]
        keep = self.valid[a] & self.valid[b]
        return np.stack([a[keep], b[keep]], axis=1)

    def families(self) -> list[tuple[int, int]]:
        return [(a, p) for a in range(self.dim) for p in (0, 1)]

    def split_point(self, box: Box, axis: int) -> int | None:
        size = box.size[axis]
        if size < 2:
            return None
        if self.kind == HEX and axis == 0 and box.size[1] > 1:
            if size < 4:
                return None
            return box.lo[0] + 2 * ((size + 2) // 4)
        return box.lo[axis] + size // 2

    def choose_split(self, box: Box):
        best = None
        for a in range(self.dim):
            m = self.split_point(box, a)
            if m is None:
                continue
            length = box.size[a] * self.spacing[a]
            if best is None or length > best[0] + 1e-12:
                best = (length, a, m)
        return None if best is None else (best[1], best[2])


# ---------------------------------------------------------------------------
# family templates
# ---------------------------------------------------------------------------


class FamilyTemplate:
    """Covering of one edge family by figure-8 cells in sequential sub-rounds."""

    def __init__(self, layout: Layout, axis: int, parity: int):
        grid = layout.grid
        edges = layout.family_edges(axis, parity)
        n_sites = grid.n_positions
        self.edge_sub = np.full(n_sites, -1, dtype=np.int64)
        self.edge_cell = np.full(n_sites, -1, dtype=np.int64)
        self.edge_bit = np.full(n_sites, -1, dtype=np.int64)
        cells = grid.figure8_cells
        cell_sites = [grid.pos_of_vid[np.array(c.vertices)] for c in cells]
        site_local = []
        for cs in cell_sites:
            site_local.append({int(s): i for i, s in enumerate(cs)})
        # candidate cells per edge
        edge_index = {(int(a), int(b)): e for e, (a, b) in enumerate(edges)}
        cell_edges: list[list[int]] = [[] for _ in cells]
        edge_cands: list[list[int]] = [[] for _ in range(len(edges))]
        local_edges = figure8.cell_edges(len(cells[0].vertices)) if cells else []
        for ci, cs in enumerate(cell_sites):
            for la, lb in local_edges:
                s, t = int(cs[la]), int(cs[lb])
                e = edge_index.get((s, t), edge_index.get((t, s)))
                if e is not None:
                    cell_edges[ci].append(e)
                    edge_cands[e].append(ci)
        remaining = np.ones(len(edges), dtype=bool)
        if len(edges) and any(not c for c in edge_cands):
            raise RoutingError(f"family {(axis, parity)} has an edge outside every figure-8 cell")
        chosen_sites, chosen_sig = [], []
        self.n_sub = 0
        while remaining.any():
            used = np.zeros(n_sites, dtype=bool)
            covered = np.zeros(len(edges), dtype=bool)
            for e in np.flatnonzero(remaining):
                if covered[e]:
                    continue
                a, b = edges[e]
                if used[a] or used[b]:
                    continue
                best, best_gain = -1, -1
                for ci in edge_cands[e]:
                    if used[cell_sites[ci]].any():
                        continue
                    gain = sum(1 for f in cell_edges[ci] if remaining[f] and not covered[f])
                    if gain > best_gain:
                        best, best_gain = ci, gain
                if best < 0:
                    continue
                used[cell_sites[best]] = True
                slot = len(chosen_sites)
                pairs = []
                for f in sorted(cell_edges[best]):
                    if remaining[f] and not covered[f]:
                        covered[f] = True
                        fa, fb = int(edges[f][0]), int(edges[f][1])
                        self.edge_sub[fa] = self.n_sub
                        self.edge_cell[fa] = slot
                        self.edge_bit[fa] = len(pairs)
                        la, lb = site_local[best][fa], site_local[best][fb]
                        pairs.append((min(la, lb), max(la, lb)))
                chosen_sites.append(cell_sites[best])
                chosen_sig.append(tuple(pairs))
            if not covered.any():
                raise RoutingError(f"could not cover family {(axis, parity)}")
            remaining &= ~covered
            self.n_sub += 1
        k = len(cells[0].vertices) if cells else 0
        self.cell_size = k
        self.cell_sites = np.array(chosen_sites, dtype=np.int64).reshape(-1, k)
        sigs = sorted(set(chosen_sig))
        sig_id = {s: i for i, s in enumerate(sigs)}
        self.cell_sig = np.array([sig_id[s] for s in chosen_sig], dtype=np.int64)
        max_bits = max((len(s) for s in sigs), default=0)
        words = {}
        for s in sigs:
            for mask in range(1, 1 << len(s)):
                pairs = [s[b] for b in range(len(s)) if mask >> b & 1]
                words[(sig_id[s], mask)] = figure8.matching_word(k, pairs)
        wmax = max((len(w) for w in words.values()), default=0)
        self.words = np.full((len(sigs), 1 << max_bits, max(wmax, 1)), -1, dtype=np.int64)
        for (si, mask), w in words.items():
            self.words[si, mask, :len(w)] = w


@lru_cache(maxsize=32)
def _templates(kind: str, extent: tuple):
    grid = GridGraph(kind, 1.0, np.zeros(len(extent)), extent)
    layout = Layout(grid)
    return {fam: FamilyTemplate(layout, *fam) for fam in layout.families()}


# ---------------------------------------------------------------------------
# step compiler
# ---------------------------------------------------------------------------


class _Compiler:
    """Turns rounds of transpositions into rotation steps."""

    def __init__(self, grid: GridGraph, occ: np.ndarray):
        self.grid = grid
        self.occ = occ
        self.templates = _templates(grid.kind, tuple(grid.extent))
        k = figure8.CELL_SIZES[grid.kind]
        self.k = k
        cycles = figure8.move_cycles(k)
        self.move_cycles = [np.array(c, dtype=np.int64) for c in cycles]
        self.cyc_mask = np.array([sum(1 << p for p in c) for c in cycles], dtype=np.int64)
        maps = figure8.move_maps(k)
        masks = np.arange(1 << k)
        rot = np.zeros((6, 1 << k), dtype=np.int64)
        for g in range(6):
            for p in range(k):
                rot[g] |= ((masks >> p) & 1) << maps[g, p]
        self.rot_table = rot
        self.builder = PlanBuilder()
        self.vid = grid.vid_of_pos

    def apply_round(self, family: tuple, first: np.ndarray, second: np.ndarray) -> None:
        """Emit rotations for the transpositions ``first[i] <-> second[i]``
        (all in ``family``) and apply them to the occupancy."""
        occ = self.occ
        if first.size == 0:
            return
        tmpl = self.templates[family]
        sub = tmpl.edge_sub[first]
        if np.any(sub < 0):
            raise RoutingError("transposition outside its family template")
        for s in np.unique(sub):
            sel = sub == s
            fa, fb = first[sel], second[sel]
            cells = tmpl.edge_cell[fa]
            masks = np.zeros(tmpl.cell_sites.shape[0], dtype=np.int64)
            np.bitwise_or.at(masks, cells, 1 << tmpl.edge_bit[fa])
            active = np.unique(cells)
            self._emit(tmpl, active, masks[active])
            tmp = occ[fa].copy()
            occ[fa] = occ[fb]
            occ[fb] = tmp

    def _emit(self, tmpl: FamilyTemplate, active: np.ndarray, masks: np.ndarray) -> None:
        words = tmpl.words[tmpl.cell_sig[active], masks]
        sites = tmpl.cell_sites[active]
        real = (self.occ[sites] >= 0).astype(np.int64)
        bits = (real << np.arange(self.k)).sum(axis=1)
        n, wl = words.shape
        keep = np.zeros((n, wl), dtype=bool)
        for t in range(wl):
            g = words[:, t]
            ok = g >= 0
            gg = np.where(ok, g, 0)
            keep[:, t] = ok & ((bits & self.cyc_mask[gg]) != 0)
            bits = np.where(ok, self.rot_table[gg, bits], bits)
        slot = np.cumsum(keep, axis=1) - 1
        n_steps = int(slot.max(initial=-1)) + 1
        for step in range(n_steps):
            rows, cols = np.nonzero(keep & (slot == step))
            gens = words[rows, cols]
            verts, lens = [], []
            for g in np.unique(gens):
                sel = gens == g
                cyc = self.move_cycles[g]
                block = self.vid[sites[rows[sel]][:, cyc]]
                verts.append(block.reshape(-1))
                lens.append(np.full(block.shape[0], cyc.size))
            self.builder.add_step(np.concatenate(verts), np.concatenate(lens))


# ---------------------------------------------------------------------------
# the router
# ---------------------------------------------------------------------------


@dataclass
class _Phase:
    sites: np.ndarray     # (n_lines, length) padded with -1
    offset: np.ndarray    # (n_lines,)
    axis: np.ndarray      # (n_lines,) lattice axis of each line
    target: np.ndarray    # (n_lines, length) target slot of the token now at each site


def _stable_targets(keys: np.ndarray) -> np.ndarray:
    order = np.argsort(keys, axis=1, kind="stable")
    tgt = np.empty_like(order)
    rows = np.arange(keys.shape[0])[:, None]
    tgt[rows, order] = np.arange(keys.shape[1])[None, :]
    return tgt


class SplitAndGroup:
    def __init__(self, instance: DiscreteInstance):
        self.instance = instance
        grid = instance.grid
        self.grid = grid
        self.layout = Layout(grid)
        n_sites = grid.n_positions
        occ = np.full(n_sites, VIRTUAL, dtype=np.int64)
        occ[~grid.site_valid] = PHANTOM
        occ[grid.pos_of_vid[instance.start]] = np.arange(instance.n)
        self.occ = occ
        self.goal_site = grid.pos_of_vid[instance.goal]
        self.side = np.zeros(n_sites, dtype=np.int64)
        self.compiler = _Compiler(grid, occ)
        self.depth_stats: list[int] = []

    # -- sides ---------------------------------------------------------------

    def _coord_along(self, sites: np.ndarray, axis: int) -> np.ndarray:
        return self.layout.coords[sites, axis]

    def _assign_sides(self, box: Box, axis: int, m: int) -> bool:
        """Set ``side`` for every token in ``box``; return True if any real
        robot is on the wrong side."""
        lines, _, _ = self.layout.lines(box, 0)
        sites = lines.reshape(-1)
        occ = self.occ[sites]
        here = self._coord_along(sites, axis)
        side = (here >= m).astype(np.int64)  # phantoms keep the side of their site
        real = occ >= 0
        goal = self._coord_along(self.goal_site[occ[real]], axis)
        want = (goal >= m).astype(np.int64)
        wrong = bool(np.any(want != side[real]))
        side[real] = want
        virt = np.flatnonzero(occ == VIRTUAL)
        need_low = int((here < m).sum()) - int((side[~(occ == VIRTUAL)] == 0).sum())
        if need_low < 0 or need_low > virt.size:
            raise RoutingError("inconsistent side counts", self.instance)
        order = np.lexsort((sites[virt], here[virt]))
        vs = np.ones(virt.size, dtype=np.int64)
        vs[order[:need_low]] = 0
        side[virt] = vs
        self.side[sites] = side
        return wrong

    # -- phase construction --------------------------------------------------

    def _n_bins(self, box: Box, line_axis: int) -> int:
        if self.layout.kind == HEX:
            return box.size[1] if line_axis == 1 else box.size[0] // 2
        return box.size[line_axis]

    def _balance_targets(self, box: Box, line_axis: int, group_axis: int | None):
        nb = self._n_bins(box, line_axis)
        if nb <= 1:
            return None
        lines, offset, bins = self.layout.lines(box, line_axis)
        n_lines, length = lines.shape
        occ = self.occ[lines]
        side = self.side[lines]
        zero = side == 0
        phantom = occ == PHANTOM
        # lines are balanced jointly within a group
        if group_axis is None:
            groups = np.zeros(n_lines, dtype=np.int64)
        else:
            groups = self.layout.coords[lines[:, 0], group_axis]
        prio = np.zeros(n_lines, dtype=np.int64)
        start = 0
        is_hex = self.layout.kind == HEX
        w, h = self.layout.extent[0], self.layout.extent[-1]
        if is_hex:
            has_ph = phantom.any(axis=1)
            if line_axis == 1:  # snakes, bins are rows; the hole snake goes first
                prio = np.where(has_ph, -1, 0)
                if has_ph.any() and box.lo[1] == 0:
                    start = 1
            else:  # rows, bins are snakes; bottom phantom row first, top one last
                ys = self.layout.coords[lines[:, 0], 1]
                prio = np.where(has_ph & (ys == 0), -1, np.where(has_ph & (ys == h - 1), 1, 0))
                if box.hi[0] == w:
                    start = nb - 1
        order = np.lexsort((np.arange(n_lines), prio, groups))
        z = zero.sum(axis=1)[order]
        g_sorted = groups[order]
        counts_sorted = np.zeros((n_lines, nb), dtype=np.int64)
        for g in np.unique(g_sorted):
            sel = np.flatnonzero(g_sorted == g)
            zz = z[sel]
            total = int(zz.sum())
            if total % nb:
                raise RoutingError("balance quota is not divisible", self.instance)
            a = start + np.concatenate([[0], np.cumsum(zz)[:-1]])
            b = a + zz
            bb = np.arange(nb)[None, :]
            cnt = (np.floor_divide(b[:, None] - 1 - bb, nb) - np.floor_divide(a[:, None] - 1 - bb, nb))
            counts_sorted[sel] = cnt
        counts = np.empty_like(counts_sorted)
        counts[order] = counts_sorted
        # choose zero slots within each (line, bin)
        kind_rank = np.where(phantom & zero, 0, np.where(phantom, 2, 1))
        col = np.broadcast_to(np.arange(length), lines.shape)
        zero_slot = np.zeros(lines.shape, dtype=bool)
        for j in range(n_lines):
            o = np.lexsort((col[j], kind_rank[j], bins[j]))
            bj = bins[j][o]
            first = np.searchsorted(bj, bj, side="left")
            rank = np.arange(length) - first
            zs = rank < counts[j][bj]
            if np.any(zs & (kind_rank[j][o] == 2)):
                raise RoutingError("phantom would have to move", self.instance)
            zero_slot[j, o] = zs
        # zeros in line order take zero slots in order; ones take the rest
        slot_key = np.where(zero_slot, 0, 1)
        slot_order = np.argsort(slot_key, axis=1, kind="stable")  # zero slots first, ascending
        tok_order = np.argsort(np.where(zero, 0, 1), axis=1, kind="stable")
        target = np.empty_like(lines)
        rows = np.arange(n_lines)[:, None]
        target[rows, tok_order] = slot_order
        if not np.array_equal(zero.sum(axis=1), zero_slot.sum(axis=1)):
            raise RoutingError("balance slots do not match token counts", self.instance)
        return lines, offset, np.full(n_lines, line_axis), target

    def _sort_targets(self, box: Box, axis: int):
        lines, offset, _ = self.layout.lines(box, axis)
        return lines, offset, np.full(lines.shape[0], axis), _stable_targets(self.side[lines])

    def _phase(self, box: Box, axis: int, phase: int):
        """Targets for one phase: balance passes first, the sort last."""
        others = [a for a in range(self.layout.dim) if a != axis]
        if phase == len(others):
            return self._sort_targets(box, axis)
        if len(others) == 1:
            return self._balance_targets(box, others[0], None)
        b, c = others
        return self._balance_targets(box, c, None) if phase == 0 else self._balance_targets(box, b, c)

    # -- odd-even execution --------------------------------------------------

    def _run(self, parts) -> None:
        parts = [p for p in parts if p is not None]
        if not parts:
            return
        length = max(p[0].shape[1] for p in parts)
        n_lines = sum(p[0].shape[0] for p in parts)
        sites = np.full((n_lines, length), -1, dtype=np.int64)
        target = np.empty((n_lines, length), dtype=np.int64)
        target[:] = length + np.arange(length)[None, :]
        offset = np.zeros(n_lines, dtype=np.int64)
        axis = np.zeros(n_lines, dtype=np.int64)
        r = 0
        for ls, off, ax, tg in parts:
            k, L = ls.shape
            sites[r:r + k, :L] = ls
            target[r:r + k, :L] = tg
            offset[r:r + k] = off
            axis[r:r + k] = ax
            r += k
        cols = np.arange(length - 1)
        quiet = 0
        rnd = 0
        while quiet < 2 and length > 1:
            parity = rnd % 2
            rnd += 1
            sel = ((cols[None, :] + offset[:, None]) % 2 == parity) & (target[:, :-1] > target[:, 1:])
            rows, cs = np.nonzero(sel)
            if rows.size == 0:
                quiet += 1
                continue
            quiet = 0
            a = sites[rows, cs]
            b = sites[rows, cs + 1]
            t = target[rows, cs].copy()
            target[rows, cs] = target[rows, cs + 1]
            target[rows, cs + 1] = t
            occ = self.occ
            if np.any(occ[a] == PHANTOM) or np.any(occ[b] == PHANTOM):
                raise RoutingError("phantom site scheduled to move", self.instance)
            # sides travel with their tokens
            s = self.side[a].copy()
            self.side[a] = self.side[b]
            self.side[b] = s
            involved = (occ[a] >= 0) | (occ[b] >= 0)
            idle_a, idle_b = a[~involved], b[~involved]
            # virtual-virtual swaps change nothing physically
            tmp = occ[idle_a].copy()
            occ[idle_a] = occ[idle_b]
            occ[idle_b] = tmp
            ax = axis[rows][involved]
            a, b = a[involved], b[involved]
            for line_axis in np.unique(ax):
                sel_ax = ax == line_axis
                self.compiler.apply_round((int(line_axis), parity), a[sel_ax], b[sel_ax])
        if not np.all(np.diff(target, axis=1) > 0):
            raise RoutingError("odd-even sort did not converge", self.instance)

    # -- driver --------------------------------------------------------------

    def solve(self) -> DiscretePlan:
        boxes = [self.layout.whole]
        while boxes:
            jobs = []
            nxt = []
            for box in boxes:
                if box.n_sites <= 1:
                    continue
                sites = self.layout.lines(box, 0)[0].reshape(-1)
                if not np.any(self.occ[sites] >= 0):
                    continue
                split = self.layout.choose_split(box)
                if split is None:
                    continue
                axis, m = split
                if self._assign_sides(box, axis, m):
                    jobs.append((box, axis, m))
                nxt.extend(box.split(axis, m))
            before = self.compiler.builder.n_steps
            for ph in range(self.layout.dim):
                self._run([self._phase(box, axis, ph) for box, axis, m in jobs])
            self.depth_stats.append(self.compiler.builder.n_steps - before)
            boxes = nxt
        final = self.occ[self.goal_site]
        if not np.array_equal(final, np.arange(self.instance.n)):
            raise RoutingError("split-and-group did not reach the goal", self.instance)
        raw = self.compiler.builder.build()
        plan = compact_plan(raw, self.grid.n_vertices)
        plan.meta.update(router="sag", uncompacted_steps=raw.n_steps, steps_per_depth=list(self.depth_stats))
        return plan


def _track_real_tokens(k: int, s: tuple, g: tuple) -> list[int]:
    """Shortest move word taking the real tokens from local slots ``s`` to ``g``."""
    maps = figure8.move_maps(k)
    parent = {s: None}
    frontier = [s]
    while frontier and g not in parent:
        nxt = []
        for state in frontier:
            for m in range(maps.shape[0]):
                new = tuple(int(maps[m, p]) for p in state)
                if new not in parent:
                    parent[new] = (state, m)
                    nxt.append(new)
        frontier = nxt
    word = []
    state = g
    while parent[state] is not None:
        state, m = parent[state]
        word.append(m)
    return word[::-1]


def solve_single_cell(instance: DiscreteInstance) -> DiscretePlan:
    """Shortest rotation word on a grid that is one figure-8 cell.

    Virtual robots may end anywhere.  With few free slots every placement
    of them is scored against the group table; otherwise only the real
    robots are tracked by breadth-first search.
    """
    grid = instance.grid
    (cell,) = grid.figure8_cells
    verts = cell.vertices
    k = len(verts)
    local = {v: i for i, v in enumerate(verts)}
    s = np.array([local[int(v)] for v in instance.start], dtype=np.int64)
    g = np.array([local[int(v)] for v in instance.goal], dtype=np.int64)
    free_src = np.setdiff1d(np.arange(k), s)
    if free_src.size > 5:
        word = _track_real_tokens(k, tuple(s.tolist()), tuple(g.tolist()))
    else:
        free_dst = np.setdiff1d(np.arange(k), g)
        perms = list(itertools.permutations(free_src.tolist()))
        perms = np.array(perms, dtype=np.int64).reshape(len(perms), free_src.size)
        cand = np.empty((perms.shape[0], k), dtype=np.int64)
        cand[:, g] = s
        cand[:, free_dst] = perms
        table = figure8.group_table(k)
        depth = table.depth[kernels.rank_numpy(cand)]
        word = table.word(cand[int(np.argmin(depth))])
    plan = DiscretePlan.from_steps([[figure8.rotation_of(cell, m)] for m in word])
    plan.meta.update(router="sag")
    return plan


@register_router("sag")
def solve_sag(instance: DiscreteInstance) -> DiscretePlan:
    """Route real robots to their goals with SplitAndGroup."""
    if np.array_equal(instance.start, instance.goal):
        return DiscretePlan.empty()
    cells = instance.grid.figure8_cells
    if len(cells) == 1 and len(cells[0].vertices) == instance.grid.n_vertices:
        return solve_single_cell(instance)
    return SplitAndGroup(instance).solve()
