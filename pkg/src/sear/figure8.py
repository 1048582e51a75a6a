"""Rotation puzzles on a fully occupied figure-8 cell.

A cell with ``K`` vertices is labelled canonically (see
:attr:`sear.grid.Figure8Cell.vertices`): ``0, 1`` is the shared edge, face A
is the cycle ``0 1 2 .. m-1`` and face B is ``1 0 m .. K-1``.  Six moves act
on it: turn face A, face B or the outer boundary ``1 2 .. m-1 0 m .. K-1``
one position forward or backward.  Face turns alone generate only a proper
subgroup on the 6-vertex square cell (order 120, no transpositions), so the
outer boundary is part of the move set on every lattice.

Shortest move sequences come from breadth-first search over the whole group
and are shipped in ``data/figure8_words.json``; ``python -m sear.figure8``
regenerates that file.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .core import ContractError
from .grid import CUBE, HEX, SQUARE, Figure8Cell

CELL_SIZES = {HEX: 10, SQUARE: 6, CUBE: 6}
DATA_FILE = "figure8_words.json"
MOVE_NAMES = ("A+", "A-", "B+", "B-", "O+", "O-")


def table_key(kind: str) -> str:
    return "hex" if CELL_SIZES[kind] == 10 else "square"


def face_size(cell_size: int) -> int:
    return (cell_size + 2) // 2


def local_cycles(cell_size: int) -> tuple:
    """Face A, face B and the outer boundary in canonical labels."""
    m = face_size(cell_size)
    a = tuple(range(m))
    b = (1, 0) + tuple(range(m, cell_size))
    outer = tuple(range(1, m)) + (0,) + tuple(range(m, cell_size))
    return a, b, outer


def move_cycles(cell_size: int) -> tuple:
    """Directed cycle for each of the six moves: the token at ``c[i]`` goes to ``c[i+1]``."""
    out = []
    for cyc in local_cycles(cell_size):
        out.append(cyc)
        out.append((cyc[0],) + tuple(reversed(cyc[1:])))
    return tuple(out)


def move_maps(cell_size: int) -> np.ndarray:
    """``maps[g, p]`` is where move ``g`` sends the token at position ``p``."""
    maps = np.tile(np.arange(cell_size), (6, 1))
    for g, cyc in enumerate(move_cycles(cell_size)):
        for i, p in enumerate(cyc):
            maps[g, p] = cyc[(i + 1) % len(cyc)]
    return maps


def inverse_move(g: int) -> int:
    return g ^ 1


def apply_word(arrangement, word, cell_size: int | None = None) -> np.ndarray:
    """Apply moves to an arrangement (``arr[p]`` = token at position ``p``)."""
    arr = np.asarray(arrangement).copy()
    maps = move_maps(arr.shape[0] if cell_size is None else cell_size)
    for g in word:
        nxt = np.empty_like(arr)
        nxt[maps[g]] = arr
        arr = nxt
    return arr


def cell_edges(cell_size: int) -> list[tuple[int, int]]:
    a, b, _ = local_cycles(cell_size)
    edges = set()
    for cyc in (a, b):
        for i in range(len(cyc)):
            u, v = cyc[i], cyc[(i + 1) % len(cyc)]
            edges.add((min(u, v), max(u, v)))
    return sorted(edges)


def matchings(cell_size: int) -> list[tuple]:
    """Every non-empty set of pairwise disjoint edges of the canonical cell."""
    edges = cell_edges(cell_size)
    out = []
    for k in range(1, cell_size // 2 + 1):
        for combo in itertools.combinations(edges, k):
            flat = [v for e in combo for v in e]
            if len(set(flat)) == len(flat):
                out.append(combo)
    return out


def pair_key(pairs) -> str:
    return ",".join(f"{a}-{b}" for a, b in pairs)


def swapped(cell_size: int, pairs) -> np.ndarray:
    arr = np.arange(cell_size)
    for a, b in pairs:
        arr[a], arr[b] = arr[b], arr[a]
    return arr


# ---------------------------------------------------------------------------
# breadth-first search tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupTable:
    cell_size: int
    parent: np.ndarray
    depth: np.ndarray

    @property
    def diameter(self) -> int:
        d = self.depth[self.depth < 255]
        return int(d.max())

    @property
    def order(self) -> int:
        return int((self.depth < 255).sum())

    def distance(self, arrangement) -> int:
        r = int(kernels.rank_numpy(np.asarray(arrangement)[None, :])[0])
        d = int(self.depth[r])
        if d == 255:
            raise ContractError("arrangement is not reachable by cell rotations")
        return d

    def word(self, arrangement) -> list[int]:
        """Shortest move sequence taking the identity to ``arrangement``."""
        arr = np.asarray(arrangement, dtype=np.int64).copy()
        maps = move_maps(self.cell_size)
        word = []
        r = int(kernels.rank_numpy(arr[None, :])[0])
        if self.depth[r] == 255:
            raise ContractError("arrangement is not reachable by cell rotations")
        while self.depth[r] != 0:
            g = int(self.parent[r])
            word.append(g)
            arr = arr[maps[g]]
            r = int(kernels.rank_numpy(arr[None, :])[0])
        word.reverse()
        return word


@lru_cache(maxsize=None)
def group_table(cell_size: int) -> GroupTable:
    parent, depth = kernels.perm_bfs(move_maps(cell_size), math.factorial(cell_size))
    return GroupTable(cell_size, parent, depth)


def generate_tables() -> dict:
    out = {}
    for key, size in (("square", 6), ("hex", 10)):
        tab = group_table(size)
        trans = {}
        for a, b in itertools.combinations(range(size), 2):
            trans[pair_key([(a, b)])] = tab.word(swapped(size, [(a, b)]))
        mats = {pair_key(m): tab.word(swapped(size, m)) for m in matchings(size)}
        out[key] = {
            "cell_size": size,
            "moves": [list(c) for c in move_cycles(size)],
            "group_order": tab.order,
            "diameter": tab.diameter,
            "s_max": max(len(w) for w in trans.values()),
            "transpositions": trans,
            "matchings": mats,
        }
    return out


@lru_cache(maxsize=None)
def shipped_tables() -> dict:
    text = resources.files("sear").joinpath("data", DATA_FILE).read_text()
    return json.loads(text)


def s_max(kind: str) -> int:
    """Longest shipped pair-exchange sequence for the kind's cell."""
    return int(shipped_tables()[table_key(kind)]["s_max"])


def transposition_word(cell_size: int, a: int, b: int) -> list[int]:
    if a == b:
        return []
    key = "hex" if cell_size == 10 else "square"
    return list(shipped_tables()[key]["transpositions"][pair_key([(min(a, b), max(a, b))])])


def matching_word(cell_size: int, pairs) -> list[int]:
    key = "hex" if cell_size == 10 else "square"
    pairs = sorted((min(a, b), max(a, b)) for a, b in pairs)
    if not pairs:
        return []
    return list(shipped_tables()[key]["matchings"][pair_key(pairs)])


# ---------------------------------------------------------------------------
# exchanges on concrete cells
# ---------------------------------------------------------------------------


def rotation_of(cell: Figure8Cell, move: int) -> tuple:
    """Directed vertex cycle that realises ``move`` on ``cell``."""
    verts = cell.vertices
    return tuple(verts[p] for p in move_cycles(len(verts))[move])


def swap_in_figure8(cell: Figure8Cell, a: int, b: int) -> list[tuple]:
    """Rotations exchanging the tokens on vertices ``a`` and ``b`` of ``cell``.

    Each rotation is a directed vertex cycle: the token on ``cycle[i]`` moves
    to ``cycle[i + 1]``.  All other tokens of the cell end where they started.
    """
    verts = cell.vertices
    if a not in verts or b not in verts:
        raise ContractError(f"vertices {a}, {b} are not both in the cell")
    if a == b:
        return []
    la, lb = verts.index(a), verts.index(b)
    return [rotation_of(cell, g) for g in transposition_word(len(verts), la, lb)]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Regenerate the figure-8 move tables.")
    ap.add_argument("--out", type=Path, default=Path(__file__).with_name("data") / DATA_FILE)
    args = ap.parse_args(argv)
    data = generate_tables()
    args.out.write_text(json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n")
    for key, tab in data.items():
        print(f"{key}: order {tab['group_order']}, diameter {tab['diameter']}, s_max {tab['s_max']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
