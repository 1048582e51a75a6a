"""Lattice graphs (hexagonal, square, cubic), nearest-vertex snapping and the
figure-8 cell partition.

Hexagonal lattices use brick-wall coordinates: vertex ``(x, y)`` sits at
``x * (sqrt(3)/2) * l`` horizontally and ``1.5 * l * y`` vertically, raised by
``l/2`` when ``x + y`` is even.  Every row is a zigzag path and a vertical
edge joins ``(x, y)`` to ``(x, y + 1)`` exactly when ``x + y`` is even, so the
faces are pointy-top hexagons ("bricks") spanning three columns and two rows.
The hex width is always even; the two right-hand corners ``(W-1, 0)`` and
``(W-1, H-1)`` would have a single neighbour and are left out of the vertex
set.  Routing code calls these missing lattice sites *phantoms*.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import ContractError, SearError

HEX, SQUARE, CUBE = "hex", "square", "cube"
KINDS = (HEX, SQUARE, CUBE)
SQRT3 = math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)


class InvalidEdgeLengthError(SearError, ValueError):
    pass


class OutOfCoverageError(SearError, ValueError):
    pass


class PartitionError(SearError, ValueError):
    pass


def default_epsilon(radius: float = 1.0) -> float:
    return 1e-3 * radius


def edge_length_bound(kind: str, radius: float = 1.0, eps: float | None = None) -> float:
    """Smallest admissible edge length for robots of the given radius.

    Hexagonal lattices keep adjacent robots of a rotating face (sqrt(3)/2) l
    apart, square and cubic ones (sqrt(2)/2) l; the square bound carries an
    extra epsilon.
    """
    if kind == HEX:
        return 4.0 / SQRT3 * radius
    if kind in (SQUARE, CUBE):
        return 4.0 / SQRT2 * radius + (default_epsilon(radius) if eps is None else eps)
    raise ContractError(f"unknown grid kind {kind!r}")


def default_edge_length(kind: str, radius: float = 1.0) -> float:
    return edge_length_bound(kind, radius)


def lattice_dim(kind: str) -> int:
    return 3 if kind == CUBE else 2


def min_extent(kind: str, extent) -> tuple:
    """Smallest extent at least ``extent`` that holds one figure-8 cell."""
    ext = [max(1, int(e)) for e in extent]
    if kind == HEX:
        w = max(6, ext[0] + (ext[0] % 2))
        h = max(2, ext[1] + (ext[1] % 2))
        return (w, h)
    ext = [max(2, e) for e in ext]
    if max(ext) < 3:
        ext[1] = 3
    return tuple(ext)


@dataclass(frozen=True)
class Figure8Cell:
    """Two faces sharing one edge.

    ``face_a`` starts ``(s0, s1, ...)`` and ``face_b`` starts ``(s1, s0, ...)``
    where ``(s0, s1)`` is the shared edge, so each tuple is a cycle in the
    rotation direction used by the swap tables.  ``extra`` lists boundary
    vertices merged into this cell by :func:`figure8_partition`.
    """

    face_a: tuple
    face_b: tuple
    shared_edge: tuple
    extra: tuple = ()

    @property
    def vertices(self) -> tuple:
        """Canonical local order: shared edge, rest of face A, rest of face B."""
        return tuple(self.shared_edge) + tuple(self.face_a[2:]) + tuple(self.face_b[2:])

    @property
    def size(self) -> int:
        return len(self.face_a) + len(self.face_b) - 2

    @property
    def outer_cycle(self) -> tuple:
        return tuple(self.face_a[1:]) + (self.face_a[0],) + tuple(self.face_b[2:])


def make_cell(face_a, face_b) -> Figure8Cell:
    a = list(face_a)
    b = list(face_b)
    shared = set(a) & set(b)
    if len(shared) != 2:
        raise ContractError("faces must share exactly one edge")
    m = len(a)
    for i in range(m):
        if a[i] in shared and a[(i + 1) % m] in shared:
            s0, s1 = a[i], a[(i + 1) % m]
            a = a[i:] + a[:i]
            break
    else:  # pragma: no cover - shared vertices of a face are always adjacent
        raise ContractError("shared vertices are not adjacent in face A")
    j = b.index(s1)
    if b[(j + 1) % len(b)] != s0:
        b = b[::-1]
        j = b.index(s1)
    b = b[j:] + b[:j]
    return Figure8Cell(tuple(int(v) for v in a), tuple(int(v) for v in b), (int(s0), int(s1)))


class GridGraph:
    """Immutable lattice graph with dense vertex ids.

    ``extent`` counts lattice sites per axis.  Vertex ids follow lattice
    position order ``x + W * (y + H * z)``, skipping hex phantom corners.
    """

    def __init__(self, kind: str, edge_length: float, origin, extent, radius: float | None = None):
        if kind not in KINDS:
            raise ContractError(f"unknown grid kind {kind!r}")
        self.kind = kind
        self.edge_length = float(edge_length)
        if radius is not None:
            bound = edge_length_bound(kind, radius)
            if self.edge_length < bound * (1.0 - 1e-12):
                raise InvalidEdgeLengthError(
                    f"edge length {self.edge_length} below the {kind} bound {bound} for r={radius}")
        if not self.edge_length > 0:
            raise InvalidEdgeLengthError("edge length must be positive")
        self.dim = lattice_dim(kind)
        self.origin = np.asarray(origin, dtype=np.float64).reshape(self.dim).copy()
        self.origin.setflags(write=False)
        extent = tuple(int(e) for e in extent)
        if len(extent) != self.dim:
            raise ContractError(f"{kind} grid needs {self.dim} extents")
        if kind == HEX and (extent[0] % 2 or extent[1] % 2 or extent[0] < 4 or extent[1] < 2):
            raise ContractError("hex extents must be even, width >= 4 and height >= 2")
        if kind != HEX and min(extent) < 2:
            raise ContractError("square/cube extents must be at least 2")
        self.extent = extent
        self._build()

    # -- construction --------------------------------------------------------

    def _build(self):
        ext = self.extent
        npos = int(np.prod(ext))
        idx = np.arange(npos)
        coords = np.empty((npos, self.dim), dtype=np.int64)
        rem = idx.copy()
        for a, e in enumerate(ext):
            coords[:, a] = rem % e
            rem //= e
        valid = np.ones(npos, dtype=bool)
        if self.kind == HEX:
            w, h = ext
            valid[self.pos_index((w - 1, 0))] = False
            valid[self.pos_index((w - 1, h - 1))] = False
        vid = np.full(npos, -1, dtype=np.int64)
        vid[valid] = np.arange(int(valid.sum()))
        self.n_positions = npos
        self.site_coords = coords
        self.site_valid = valid
        self.vid_of_pos = vid
        self.pos_of_vid = np.flatnonzero(valid)
        self.coords = coords[valid]
        self.positions = self._embed(self.coords)
        for arr in (self.site_coords, self.site_valid, self.vid_of_pos, self.pos_of_vid,
                    self.coords, self.positions):
            arr.setflags(write=False)

    def pos_index(self, coord) -> int:
        p = 0
        for a in range(self.dim - 1, -1, -1):
            p = p * self.extent[a] + int(coord[a])
        return p

    def _embed(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(coords, dtype=np.float64)
        el = self.edge_length
        if self.kind == HEX:
            x, y = c[:, 0], c[:, 1]
            lift = ((coords[:, 0] + coords[:, 1]) % 2 == 0) * 0.5
            pts = np.stack([x * (SQRT3 / 2.0) * el, (1.5 * y + lift) * el], axis=1)
        else:
            pts = c * el
        return pts + self.origin

    # -- basic queries -------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.pos_of_vid.shape[0]

    def vertex_id(self, coord) -> int:
        if any(not (0 <= int(coord[a]) < self.extent[a]) for a in range(self.dim)):
            return -1
        return int(self.vid_of_pos[self.pos_index(coord)])

    def position(self, v: int) -> np.ndarray:
        return self.positions[v]

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array of vertex ids, smaller id first."""
        out = []
        ext = self.extent
        sc = self.site_coords
        for a in range(self.dim):
            ok = sc[:, a] < ext[a] - 1
            if self.kind == HEX and a == 1:
                ok &= (sc[:, 0] + sc[:, 1]) % 2 == 0
            p = np.flatnonzero(ok)
            stride = int(np.prod(ext[:a]))
            q = p + stride
            keep = self.site_valid[p] & self.site_valid[q]
            out.append(np.stack([self.vid_of_pos[p[keep]], self.vid_of_pos[q[keep]]], axis=1))
        e = np.concatenate(out)
        e.sort(axis=1)
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
        e.setflags(write=False)
        return e

    @cached_property
    def _csr(self):
        e = self.edges
        n = self.n_vertices
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst

    def neighbors(self, v: int) -> np.ndarray:
        indptr, idx = self._csr
        return idx[indptr[v]:indptr[v + 1]]

    def degree(self) -> np.ndarray:
        indptr, _ = self._csr
        return np.diff(indptr)

    def adjacent(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors(u) == v))

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    # -- faces and figure-8 cells -------------------------------------------

    @cached_property
    def _faces(self):
        faces, planes = [], []
        sc = self.site_coords
        ext = self.extent
        if self.kind == HEX:
            w, h = ext
            for y in range(h - 1):
                for x0 in range((y % 2), w - 2, 2):
                    cyc = [(x0, y), (x0 + 1, y), (x0 + 2, y), (x0 + 2, y + 1), (x0 + 1, y + 1), (x0, y + 1)]
                    ids = [self.vertex_id(c) for c in cyc]
                    if min(ids) >= 0:
                        faces.append(ids)
                        planes.append(0)
        else:
            plane_axes = [(0, 1)] if self.dim == 2 else [(0, 1), (0, 2), (1, 2)]
            for pl, (a, b) in enumerate(plane_axes):
                ok = (sc[:, a] < ext[a] - 1) & (sc[:, b] < ext[b] - 1)
                sa = int(np.prod(ext[:a]))
                sb = int(np.prod(ext[:b]))
                for p in np.flatnonzero(ok):
                    cyc = [p, p + sa, p + sa + sb, p + sb]
                    faces.append([int(self.vid_of_pos[q]) for q in cyc])
                    planes.append(pl)
        m = 6 if self.kind == HEX else 4
        return np.array(faces, dtype=np.int64).reshape(-1, m), np.array(planes, dtype=np.int64)

    @property
    def faces(self) -> np.ndarray:
        """Face boundary cycles, one row per face."""
        return self._faces[0]

    @property
    def face_planes(self) -> np.ndarray:
        """Plane index per face (always 0 in 2D; 0=xy, 1=xz, 2=yz for cubes)."""
        return self._faces[1]

    @cached_property
    def figure8_cells(self) -> tuple:
        """Every pair of coplanar faces sharing exactly one edge."""
        faces, planes = self._faces
        by_edge: dict = {}
        for f, cyc in enumerate(faces.tolist()):
            m = len(cyc)
            for i in range(m):
                key = (min(cyc[i], cyc[(i + 1) % m]), max(cyc[i], cyc[(i + 1) % m]))
                by_edge.setdefault(key, []).append(f)
        pairs = set()
        for fs in by_edge.values():
            for i in range(len(fs)):
                for j in range(i + 1, len(fs)):
                    if planes[fs[i]] == planes[fs[j]]:
                        pairs.add((fs[i], fs[j]))
        cells = []
        for fa, fb in sorted(pairs):
            cells.append(make_cell(faces[fa].tolist(), faces[fb].tolist()))
        return tuple(cells)

    @cached_property
    def rotation_cycles(self) -> frozenset:
        """Vertex sets of all cycles that may be rotated in one step: faces and
        figure-8 outer boundaries."""
        out = set(frozenset(f) for f in self.faces.tolist())
        for c in self.figure8_cells:
            out.add(frozenset(c.vertices))
        return frozenset(out)

    # -- snapping ------------------------------------------------------------

    def _lattice_guess(self, pts: np.ndarray) -> np.ndarray:
        rel = pts - self.origin
        el = self.edge_length
        if self.kind == HEX:
            return np.stack([rel[:, 0] / (SQRT3 / 2.0 * el), rel[:, 1] / (1.5 * el)], axis=1)
        return rel / el

    def nearest_vertices(self, points, tie_tol: float = 1e-9) -> np.ndarray:
        """Vectorised :meth:`nearest_vertex`."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dim:
            raise ContractError(f"points must be {self.dim}-dimensional")
        guess = np.floor(self._lattice_guess(pts)).astype(np.int64)
        span = [range(-2, 4), range(-1, 3)] if self.kind == HEX else [range(-1, 3)] * self.dim
        offsets = np.array(np.meshgrid(*span, indexing="ij")).reshape(self.dim, -1).T
        cand = guess[:, None, :] + offsets[None, :, :]
        inside = np.ones(cand.shape[:2], dtype=bool)
        for a in range(self.dim):
            inside &= (cand[..., a] >= 0) & (cand[..., a] < self.extent[a])
        clipped = np.where(inside[..., None], cand, 0)
        pos = np.zeros(cand.shape[:2], dtype=np.int64)
        for a in range(self.dim - 1, -1, -1):
            pos = pos * self.extent[a] + clipped[..., a]
        vids = np.where(inside, self.vid_of_pos[pos], -1)
        ok = vids >= 0
        d = np.full(vids.shape, np.inf)
        d[ok] = np.linalg.norm(self.positions[vids[ok]] - np.repeat(pts, vids.shape[1], axis=0).reshape(
            vids.shape + (self.dim,))[ok], axis=1)
        dmin = d.min(axis=1)
        if np.any(~np.isfinite(dmin)) or np.any(dmin > self.edge_length * (1 + tie_tol)):
            bad = int(np.flatnonzero(~(dmin <= self.edge_length * (1 + tie_tol)))[0])
            raise OutOfCoverageError(f"point {pts[bad].tolist()} is not within one edge length of the grid")
        near = d <= dmin[:, None] + tie_tol * self.edge_length
        masked = np.where(near, vids, np.iinfo(np.int64).max)
        return masked.min(axis=1)

    def nearest_vertex(self, p) -> int:
        """Closest vertex to ``p``; ties (within 1e-9 l) go to the lowest id."""
        return int(self.nearest_vertices(np.asarray(p, dtype=np.float64)[None, :])[0])

    # -- serialisation -------------------------------------------------------

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "edge_length": self.edge_length,
            "origin": self.origin.tolist(),
            "extent": list(self.extent),
        }

    @classmethod
    def from_descriptor(cls, desc: dict, radius: float | None = None) -> "GridGraph":
        return cls(desc["kind"], desc["edge_length"], desc["origin"], desc["extent"], radius=radius)

    def __repr__(self) -> str:
        return f"GridGraph({self.kind!r}, l={self.edge_length:.6g}, extent={self.extent}, |V|={self.n_vertices})"


def make_grid(kind: str, extent, edge_length: float | None = None, origin=None,
              radius: float | None = None) -> GridGraph:
    """Grid of at least ``extent`` sites, padded up to hold one figure-8 cell."""
    if edge_length is None:
        edge_length = default_edge_length(kind, 1.0 if radius is None else radius)
    ext = min_extent(kind, extent)
    if origin is None:
        origin = np.zeros(lattice_dim(kind))
    return GridGraph(kind, edge_length, origin, ext, radius=radius)


def build_covering_grid(kind: str, edge_length: float, center, cover_radius: float,
                        radius: float = 1.0) -> GridGraph:
    """Smallest lattice block (plus one ring of faces) covering a ball.

    The lattice is anchored so that a vertex sits exactly on ``center``.
    Every point within ``cover_radius`` of ``center`` then lies inside a face
    of the grid, hence within one edge length of a vertex.
    """
    bound = edge_length_bound(kind, radius)
    if edge_length < bound * (1.0 - 1e-12):
        raise InvalidEdgeLengthError(f"edge length {edge_length} below the {kind} bound {bound}")
    if not cover_radius > 0:
        raise ContractError("cover radius must be positive")
    center = np.asarray(center, dtype=np.float64).reshape(lattice_dim(kind))
    el = edge_length
    reach = cover_radius + el
    if kind == HEX:
        kx = max(2, math.ceil(reach / (SQRT3 / 2.0 * el)))
        ky = max(1, math.ceil((reach + 0.5 * el) / (1.5 * el)))
        w = 2 * kx + 2
        h = 2 * ky + 2
        cx, cy = kx, ky + 1
        lift = 0.5 if (cx + cy) % 2 == 0 else 0.0
        origin = center - np.array([cx * SQRT3 / 2.0 * el, (1.5 * cy + lift) * el])
        return GridGraph(kind, el, origin, (w, h), radius=radius)
    kk = max(1, math.ceil(reach / el))
    # 2x3 cells tile a two-site strip without leftovers only when its length
    # is a multiple of 3; the router's transposition rounds then take one pass
    ext = [3 * math.ceil((2 * kk + 1) / 3)] * lattice_dim(kind)
    origin = center - kk * el
    return GridGraph(kind, el, origin, ext, radius=radius)


# ---------------------------------------------------------------------------
# figure-8 partition
# ---------------------------------------------------------------------------


def _pattern_cells(grid: GridGraph) -> list[tuple[int, int]]:
    """Face pairs of the fixed tiling pattern that fit inside the grid."""
    faces = grid.faces
    face_index = {tuple(sorted(f)): i for i, f in enumerate(faces.tolist())}

    def face_at(cyc_coords):
        ids = [grid.vertex_id(c) for c in cyc_coords]
        if min(ids) < 0:
            return None
        return face_index.get(tuple(sorted(ids)))

    out = []
    if grid.kind == HEX:
        w, h = grid.extent
        # horizontal figure-8 blocks five columns wide; neighbouring block
        # columns are staggered by one row, which tiles the plane
        for g in range(w // 5 + 1):
            x0 = 5 * g
            for y in range(x0 % 2, h - 1, 2):
                fa = face_at([(x0, y), (x0 + 1, y), (x0 + 2, y), (x0 + 2, y + 1), (x0 + 1, y + 1), (x0, y + 1)])
                fb = face_at([(x0 + 2, y), (x0 + 3, y), (x0 + 4, y), (x0 + 4, y + 1), (x0 + 3, y + 1),
                              (x0 + 2, y + 1)])
                if fa is not None and fb is not None:
                    out.append((fa, fb))
        return out

    best: list = []
    planes = [(0, 1)] if grid.dim == 2 else [(0, 1), (0, 2), (1, 2)]
    for a, b in planes:
        for long_axis in (b, a):
            short_axis = a if long_axis == b else b
            cand = []
            rest = [c for c in range(grid.dim) if c not in (a, b)]
            ranges = [range(0, grid.extent[short_axis] - 1, 2), range(0, grid.extent[long_axis] - 2, 3)]
            layers = range(grid.extent[rest[0]]) if rest else [None]
            for layer in layers:
                for s in ranges[0]:
                    for t in ranges[1]:
                        def sq(t0):
                            base = [0] * grid.dim
                            if layer is not None:
                                base[rest[0]] = layer
                            cyc = []
                            for ds, dt in ((0, 0), (1, 0), (1, 1), (0, 1)):
                                c = list(base)
                                c[short_axis] = s + ds
                                c[long_axis] = t0 + dt
                                cyc.append(c)
                            return face_at(cyc)
                        fa, fb = sq(t), sq(t + 1)
                        if fa is not None and fb is not None:
                            cand.append((fa, fb))
            if len(cand) > len(best):
                best = cand
    return best


def figure8_partition(grid: GridGraph) -> list[Figure8Cell]:
    """Vertex-disjoint figure-8 cells covering the grid.

    Cells follow a fixed tiling pattern (2x3 blocks on square and cubic
    lattices, staggered five-column blocks on hexagonal ones).  Vertices the
    pattern leaves out at the boundary are merged into the nearest cell by a
    breadth-first sweep seeded in cell order, and listed in ``extra``.
    """
    pairs = _pattern_cells(grid)
    if not pairs:
        raise PartitionError(f"{grid!r} is too small to hold a figure-8 cell")
    faces = grid.faces
    cells = [make_cell(faces[a].tolist(), faces[b].tolist()) for a, b in pairs]
    owner = np.full(grid.n_vertices, -1, dtype=np.int64)
    queue = deque()
    for ci, cell in enumerate(cells):
        for v in cell.vertices:
            owner[v] = ci
    for v in range(grid.n_vertices):
        if owner[v] >= 0:
            queue.append(v)
    extras: list[list[int]] = [[] for _ in cells]
    while queue:
        v = queue.popleft()
        for u in grid.neighbors(v):
            if owner[u] < 0:
                owner[u] = owner[v]
                extras[owner[v]].append(int(u))
                queue.append(int(u))
    return [Figure8Cell(c.face_a, c.face_b, c.shared_edge, tuple(sorted(x))) for c, x in zip(cells, extras)]
