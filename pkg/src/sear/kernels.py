"""Hot loops with a numba implementation and a pure-numpy twin.

Every public function dispatches on :data:`sear._accel.USE_NUMBA`.  The
``*_numba`` and ``*_numpy`` variants are importable directly so the two
paths can be cross-checked and benchmarked against each other; both return
identical results.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# permutation ranking and breadth-first search over a generated group
# ---------------------------------------------------------------------------


@njit
def _rank_nb(a):
    k = a.shape[0]
    r = 0
    for i in range(k):
        c = 0
        for j in range(i + 1, k):
            if a[j] < a[i]:
                c += 1
        r = r * (k - i) + c
    return r


@njit
def _unrank_nb(r, k, out, digits, used):
    for i in range(k - 1, -1, -1):
        base = k - i
        digits[i] = r % base
        r //= base
    for v in range(k):
        used[v] = False
    for i in range(k):
        c = digits[i]
        for v in range(k):
            if not used[v]:
                if c == 0:
                    out[i] = v
                    used[v] = True
                    break
                c -= 1


@njit
def _perm_bfs_nb(gens, n_states):
    k = gens.shape[1]
    parent = np.full(n_states, 255, np.uint8)
    depth = np.full(n_states, 255, np.uint8)
    queue = np.empty(n_states, np.int64)
    a = np.empty(k, np.int64)
    b = np.empty(k, np.int64)
    digits = np.empty(k, np.int64)
    used = np.empty(k, np.bool_)
    for i in range(k):
        a[i] = i
    root = _rank_nb(a)
    depth[root] = 0
    queue[0] = root
    head = 0
    tail = 1
    while head < tail:
        s = queue[head]
        head += 1
        _unrank_nb(s, k, a, digits, used)
        for g in range(gens.shape[0]):
            for p in range(k):
                b[gens[g, p]] = a[p]
            rr = _rank_nb(b)
            if depth[rr] == 255:
                depth[rr] = depth[s] + 1
                parent[rr] = g
                queue[tail] = rr
                tail += 1
    return parent, depth


def rank_numpy(states: np.ndarray) -> np.ndarray:
    """Lehmer rank of each row of ``states`` (rows are permutations of 0..k-1)."""
    states = np.asarray(states)
    k = states.shape[1]
    r = np.zeros(states.shape[0], dtype=np.int64)
    for i in range(k):
        c = (states[:, i + 1:] < states[:, i:i + 1]).sum(axis=1)
        r = r * (k - i) + c
    return r


def unrank_numpy(ranks: np.ndarray, k: int) -> np.ndarray:
    ranks = np.asarray(ranks, dtype=np.int64).copy()
    m = ranks.shape[0]
    digits = np.empty((m, k), dtype=np.int64)
    for i in range(k - 1, -1, -1):
        base = k - i
        digits[:, i] = ranks % base
        ranks //= base
    out = np.empty((m, k), dtype=np.int64)
    avail = np.tile(np.arange(k), (m, 1))
    for i in range(k):
        # pick the digits[i]-th still-available value
        idx = digits[:, i]
        out[:, i] = avail[np.arange(m), idx]
        keep = np.ones_like(avail, dtype=bool)
        keep[np.arange(m), idx] = False
        avail = avail[keep].reshape(m, k - i - 1)
    return out


def _perm_bfs_np(gens, n_states):
    gens = np.asarray(gens, dtype=np.int64)
    n_gen, k = gens.shape
    parent = np.full(n_states, 255, np.uint8)
    depth = np.full(n_states, 255, np.uint8)
    frontier = np.arange(k, dtype=np.int8)[None, :]
    depth[rank_numpy(frontier)] = 0
    level = 0
    while frontier.shape[0]:
        f = frontier.shape[0]
        nxt = np.empty((f, n_gen, k), dtype=np.int8)
        for g in range(n_gen):
            nxt[:, g, gens[g]] = frontier
        nxt = nxt.reshape(f * n_gen, k)
        ranks = rank_numpy(nxt)
        fresh = depth[ranks] == 255
        cand = np.flatnonzero(fresh)
        if cand.size == 0:
            break
        # first discovery wins, in queue order (state-major, generator-minor)
        _, first = np.unique(ranks[cand], return_index=True)
        first = np.sort(cand[first])
        level += 1
        depth[ranks[first]] = level
        parent[ranks[first]] = (first % n_gen).astype(np.uint8)
        frontier = nxt[first]
    return parent, depth


def perm_bfs_numba(gens, n_states=None):
    gens = np.ascontiguousarray(gens, dtype=np.int64)
    if n_states is None:
        n_states = math.factorial(gens.shape[1])
    return _perm_bfs_nb(gens, n_states)


def perm_bfs_numpy(gens, n_states=None):
    gens = np.asarray(gens, dtype=np.int64)
    if n_states is None:
        n_states = math.factorial(gens.shape[1])
    return _perm_bfs_np(gens, n_states)


def perm_bfs(gens, n_states=None):
    """BFS from the identity arrangement over the group generated by ``gens``.

    ``gens[g, p]`` is where the token at position ``p`` goes under generator
    ``g``.  Returns ``(parent, depth)`` indexed by Lehmer rank; 255 marks an
    unreached state (or the root, for ``parent``).
    """
    if _accel.USE_NUMBA:
        return perm_bfs_numba(gens, n_states)
    return perm_bfs_numpy(gens, n_states)


# ---------------------------------------------------------------------------
# continuous clearance scan over time slabs
# ---------------------------------------------------------------------------


@njit
def _advance_nb(times, pts, offs, ptr, t, out):
    n = offs.shape[0] - 1
    k = pts.shape[1]
    for i in range(n):
        lo = offs[i]
        hi = offs[i + 1]
        j = ptr[i]
        while lo + j + 1 < hi and times[lo + j + 1] <= t:
            j += 1
        ptr[i] = j
        a = lo + j
        if a + 1 < hi and times[a] < t:
            w = (t - times[a]) / (times[a + 1] - times[a])
            for c in range(k):
                out[i, c] = pts[a, c] + w * (pts[a + 1, c] - pts[a, c])
        elif t <= times[lo]:
            for c in range(k):
                out[i, c] = pts[lo, c]
        else:
            for c in range(k):
                out[i, c] = pts[a, c]


@njit
def _clearance_scan_nb(times, pts, offs, bounds, thresh, max_report):
    n = offs.shape[0] - 1
    k = pts.shape[1]
    ptr = np.zeros(n, np.int64)
    p0 = np.empty((n, k))
    p1 = np.empty((n, k))
    _advance_nb(times, pts, offs, ptr, bounds[0], p0)
    v_time = np.empty(max_report)
    v_i = np.empty(max_report, np.int64)
    v_j = np.empty(max_report, np.int64)
    v_d = np.empty(max_report)
    n_viol = 0
    best_d = np.inf
    best_t = 0.0
    best_i = -1
    best_j = -1
    d0 = np.empty(k)
    dv = np.empty(k)
    for s in range(bounds.shape[0] - 1):
        ta = bounds[s]
        tb = bounds[s + 1]
        _advance_nb(times, pts, offs, ptr, tb, p1)
        maxdisp = 0.0
        for i in range(n):
            acc = 0.0
            for c in range(k):
                acc += (p1[i, c] - p0[i, c]) ** 2
            if acc > maxdisp:
                maxdisp = acc
        window = 2.0 * thresh + 2.0 * math.sqrt(maxdisp)
        order = np.argsort(p0[:, 0], kind="mergesort")
        for a in range(n):
            i = order[a]
            for b in range(a + 1, n):
                j = order[b]
                if p0[j, 0] - p0[i, 0] > window:
                    break
                vv = 0.0
                dd = 0.0
                for c in range(k):
                    d0[c] = p0[i, c] - p0[j, c]
                    dv[c] = (p1[i, c] - p1[j, c]) - d0[c]
                    vv += dv[c] * dv[c]
                    dd += d0[c] * dv[c]
                u = 0.0
                if vv > 0.0:
                    u = -dd / vv
                    if u < 0.0:
                        u = 0.0
                    elif u > 1.0:
                        u = 1.0
                dist2 = 0.0
                for c in range(k):
                    e = d0[c] + u * dv[c]
                    dist2 += e * e
                dist = math.sqrt(dist2)
                t = ta + u * (tb - ta)
                lo_i = i if i < j else j
                hi_j = j if i < j else i
                if dist < best_d or (dist == best_d and t < best_t):
                    best_d = dist
                    best_t = t
                    best_i = lo_i
                    best_j = hi_j
                if dist < thresh:
                    if n_viol < max_report:
                        v_time[n_viol] = t
                        v_i[n_viol] = lo_i
                        v_j[n_viol] = hi_j
                        v_d[n_viol] = dist
                    n_viol += 1
        for i in range(n):
            for c in range(k):
                p0[i, c] = p1[i, c]
    m = min(n_viol, max_report)
    return (v_time[:m], v_i[:m], v_j[:m], v_d[:m], n_viol,
            best_d, best_t, best_i, best_j)


def _positions_at_np(times, pts, offs, ts):
    n = offs.shape[0] - 1
    out = np.empty((n, ts.shape[0], pts.shape[1]))
    for i in range(n):
        tt = times[offs[i]:offs[i + 1]]
        pp = pts[offs[i]:offs[i + 1]]
        for c in range(pts.shape[1]):
            out[i, :, c] = np.interp(ts, tt, pp[:, c])
    return out


def _clearance_scan_np(times, pts, offs, bounds, thresh, max_report, chunk=1024):
    n = offs.shape[0] - 1
    viol_t, viol_i, viol_j, viol_d = [], [], [], []
    n_viol = 0
    best = (np.inf, 0.0, -1, -1)
    n_slabs = bounds.shape[0] - 1
    for c0 in range(0, n_slabs, chunk):
        c1 = min(n_slabs, c0 + chunk)
        pos = _positions_at_np(times, pts, offs, bounds[c0:c1 + 1])
        for s in range(c1 - c0):
            p0 = pos[:, s]
            p1 = pos[:, s + 1]
            ta, tb = bounds[c0 + s], bounds[c0 + s + 1]
            maxdisp = np.sqrt(((p1 - p0) ** 2).sum(axis=1).max()) if n else 0.0
            window = 2.0 * thresh + 2.0 * maxdisp
            order = np.argsort(p0[:, 0], kind="stable")
            xs = p0[order, 0]
            hi = np.searchsorted(xs, xs + window, side="right")
            counts = hi - np.arange(n) - 1
            counts = np.maximum(counts, 0)
            if counts.sum() == 0:
                continue
            a = np.repeat(np.arange(n), counts)
            starts = np.cumsum(counts) - counts
            b = a + 1 + (np.arange(counts.sum()) - np.repeat(starts, counts))
            ii, jj = order[a], order[b]
            # keep only pairs that are within the window (searchsorted is inclusive)
            d0 = p0[ii] - p0[jj]
            dv = (p1[ii] - p1[jj]) - d0
            vv = (dv * dv).sum(axis=1)
            dd = (d0 * dv).sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                u = np.where(vv > 0.0, np.clip(-dd / np.where(vv > 0, vv, 1.0), 0.0, 1.0), 0.0)
            dist = np.sqrt(((d0 + u[:, None] * dv) ** 2).sum(axis=1))
            t = ta + u * (tb - ta)
            lo = np.minimum(ii, jj)
            hj = np.maximum(ii, jj)
            # match the numba tie order: smallest distance, then earliest time,
            # then scan order
            m = np.lexsort((t, dist))[0]
            if dist[m] < best[0] or (dist[m] == best[0] and t[m] < best[1]):
                best = (float(dist[m]), float(t[m]), int(lo[m]), int(hj[m]))
            bad = np.flatnonzero(dist < thresh)
            if bad.size:
                room = max_report - len(viol_t)
                take = bad[:room]
                viol_t.extend(t[take].tolist())
                viol_i.extend(lo[take].tolist())
                viol_j.extend(hj[take].tolist())
                viol_d.extend(dist[take].tolist())
                n_viol += int(bad.size)
    return (np.array(viol_t), np.array(viol_i, dtype=np.int64), np.array(viol_j, dtype=np.int64),
            np.array(viol_d), n_viol) + best


def clearance_scan_numba(times, pts, offs, bounds, thresh, max_report=100):
    return _clearance_scan_nb(np.ascontiguousarray(times, dtype=np.float64),
                              np.ascontiguousarray(pts, dtype=np.float64),
                              np.ascontiguousarray(offs, dtype=np.int64),
                              np.ascontiguousarray(bounds, dtype=np.float64),
                              float(thresh), int(max_report))


def clearance_scan_numpy(times, pts, offs, bounds, thresh, max_report=100):
    return _clearance_scan_np(np.asarray(times, dtype=np.float64), np.asarray(pts, dtype=np.float64),
                              np.asarray(offs, dtype=np.int64), np.asarray(bounds, dtype=np.float64),
                              float(thresh), int(max_report))


def clearance_scan(times, pts, offs, bounds, thresh, max_report=100):
    """Minimum pairwise distance of piecewise-linear trajectories, slab by slab.

    Trajectories are packed: robot ``i`` owns waypoints ``offs[i]:offs[i+1]``
    of ``times``/``pts``; a robot holds its first point before its first
    waypoint and its last point after its last one.  ``bounds`` must contain
    every waypoint time, so motion inside a slab is linear for every robot.

    Returns ``(v_time, v_i, v_j, v_dist, n_violations, best_dist, best_time,
    best_i, best_j)``.  Violations are pairs closer than ``thresh``; the first
    ``max_report`` are returned, in slab order.  The ``best_*`` values track
    the closest approach among pairs inside the broadphase window (pairs that
    never get within ``2*thresh`` of each other are not measured).
    """
    if _accel.USE_NUMBA:
        return clearance_scan_numba(times, pts, offs, bounds, thresh, max_report)
    return clearance_scan_numpy(times, pts, offs, bounds, thresh, max_report)


# ---------------------------------------------------------------------------
# rejection sampling of well-separated points
# ---------------------------------------------------------------------------


@njit
def _reject_fill_nb(cand, radius, min_dist, accepted, count, fails, max_fails):
    k = cand.shape[1]
    r2 = radius * radius
    m2 = min_dist * min_dist
    used = 0
    for c in range(cand.shape[0]):
        if count >= accepted.shape[0] or fails >= max_fails:
            break
        used += 1
        acc = 0.0
        for q in range(k):
            acc += cand[c, q] * cand[c, q]
        ok = acc <= r2
        if ok:
            for a in range(count):
                d2 = 0.0
                for q in range(k):
                    d2 += (cand[c, q] - accepted[a, q]) ** 2
                if d2 < m2:
                    ok = False
                    break
        if ok:
            for q in range(k):
                accepted[count, q] = cand[c, q]
            count += 1
            fails = 0
        else:
            fails += 1
    return count, fails, used


def _reject_fill_np(cand, radius, min_dist, accepted, count, fails, max_fails):
    used = 0
    m2 = min_dist * min_dist
    inside = (cand * cand).sum(axis=1) <= radius * radius
    for c in range(cand.shape[0]):
        if count >= accepted.shape[0] or fails >= max_fails:
            break
        used += 1
        ok = bool(inside[c])
        if ok and count:
            d2 = ((accepted[:count] - cand[c]) ** 2).sum(axis=1)
            ok = bool(d2.min() >= m2)
        if ok:
            accepted[count] = cand[c]
            count += 1
            fails = 0
        else:
            fails += 1
    return count, fails, used


def reject_fill(cand, radius, min_dist, accepted, count, fails, max_fails, use_numba=None):
    """Consume candidates (centered coordinates) in order, accepting each one
    inside the ball of ``radius`` and at least ``min_dist`` from all accepted.

    Updates ``accepted`` in place.  Returns ``(count, fails, used)`` where
    ``fails`` is the running count of consecutive rejections.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    fn = _reject_fill_nb if use_numba else _reject_fill_np
    count, fails, used = fn(np.ascontiguousarray(cand, dtype=np.float64), float(radius), float(min_dist),
                            accepted, int(count), int(fails), int(max_fails))
    return int(count), int(fails), int(used)


# ---------------------------------------------------------------------------
# step compaction
# ---------------------------------------------------------------------------


@njit
def _asap_levels_nb(cv, co, so, n_vertices):
    last = np.full(n_vertices, -1, dtype=np.int64)
    level = np.empty(co.shape[0] - 1, dtype=np.int64)
    for s in range(so.shape[0] - 1):
        for c in range(so[s], so[s + 1]):
            m = -1
            for k in range(co[c], co[c + 1]):
                if last[cv[k]] > m:
                    m = last[cv[k]]
            level[c] = m + 1
        for c in range(so[s], so[s + 1]):
            for k in range(co[c], co[c + 1]):
                last[cv[k]] = level[c]
    return level


def _asap_levels_np(cv, co, so, n_vertices):
    last = np.full(n_vertices, -1, dtype=np.int64)
    level = np.empty(co.shape[0] - 1, dtype=np.int64)
    for s in range(so.shape[0] - 1):
        a, b = so[s], so[s + 1]
        if a == b:
            continue
        lo, hi = co[a], co[b]
        # rotations of one step are vertex-disjoint, so the step updates at once
        lv = np.maximum.reduceat(last[cv[lo:hi]], co[a:b] - lo) + 1
        level[a:b] = lv
        last[cv[lo:hi]] = np.repeat(lv, np.diff(co[a:b + 1]))
    return level


def asap_levels(cycle_vertices, cycle_offsets, step_offsets, n_vertices, use_numba=None):
    """Earliest step for every rotation that keeps the order of overlapping rotations.

    Rotations on disjoint vertex sets commute, so moving each rotation to one
    past the last earlier rotation sharing a vertex leaves the final
    arrangement unchanged.
    """
    args = (np.ascontiguousarray(cycle_vertices, dtype=np.int64),
            np.ascontiguousarray(cycle_offsets, dtype=np.int64),
            np.ascontiguousarray(step_offsets, dtype=np.int64), int(n_vertices))
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _asap_levels_nb(*args)
    return _asap_levels_np(*args)
