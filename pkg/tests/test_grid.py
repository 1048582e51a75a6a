import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sear.grid import (CUBE, HEX, SQUARE, InvalidEdgeLengthError, OutOfCoverageError, PartitionError, GridGraph,
                       build_covering_grid, default_edge_length, edge_length_bound, figure8_partition, make_grid)

SQ_L = 4 / math.sqrt(2)
HEX_L = 4 / math.sqrt(3)


def test_edge_length_bounds():
    assert edge_length_bound(HEX, 1.0) == pytest.approx(HEX_L, abs=1e-15)
    assert edge_length_bound(SQUARE, 1.0) == pytest.approx(SQ_L + 1e-3)
    assert default_edge_length(CUBE, 2.0) == pytest.approx(2 * SQ_L + 2e-3)


@pytest.mark.parametrize("kind,extent", [(HEX, (10, 6)), (SQUARE, (5, 7)), (CUBE, (3, 4, 3))])
def test_adjacent_vertices_are_one_edge_apart(kind, extent):
    g = make_grid(kind, extent)
    e = g.edges
    d = np.linalg.norm(g.positions[e[:, 0]] - g.positions[e[:, 1]], axis=1)
    np.testing.assert_allclose(d, g.edge_length, atol=1e-9)
    # and no non-adjacent pair is that close
    diff = np.linalg.norm(g.positions[:, None] - g.positions[None], axis=2)
    close = np.argwhere(np.triu(diff < g.edge_length * (1 + 1e-9), 1))
    assert {tuple(p) for p in close.tolist()} == g.edge_set


def test_degrees():
    assert set(make_grid(HEX, (10, 6)).degree().tolist()) <= {1, 2, 3}
    assert make_grid(HEX, (10, 6)).degree().max() == 3
    assert make_grid(SQUARE, (5, 5)).degree().max() == 4
    assert make_grid(CUBE, (3, 3, 3)).degree().max() == 6


def test_faces_are_closed_cycles():
    for kind, ext in ((HEX, (8, 4)), (SQUARE, (4, 3)), (CUBE, (2, 3, 2))):
        g = make_grid(kind, ext)
        for f in g.faces.tolist():
            for a, b in zip(f, f[1:] + f[:1]):
                assert g.adjacent(a, b)


def test_covering_grid_minimal_cover():
    c = np.array([1.0, -2.0])
    g = build_covering_grid(HEX, HEX_L, c, HEX_L / 2)
    assert len(g.faces) >= 1
    v = g.nearest_vertex(c)
    assert np.linalg.norm(g.positions[v] - c) == pytest.approx(0.0, abs=1e-12)


def test_covering_grid_dense_sampling_hex():
    rng = np.random.default_rng(0)
    c = np.array([3.0, 7.0])
    g = build_covering_grid(HEX, HEX_L, c, 10.0)
    ang = rng.uniform(0, 2 * np.pi, 10_000)
    rad = 10.0 * np.sqrt(rng.uniform(0, 1, 10_000))
    pts = c + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    v = g.nearest_vertices(pts)
    assert np.all(np.linalg.norm(g.positions[v] - pts, axis=1) <= g.edge_length + 1e-12)


@pytest.mark.parametrize("kind", [SQUARE, CUBE])
def test_covering_grid_dense_sampling_square_cube(kind):
    rng = np.random.default_rng(1)
    k = 3 if kind == CUBE else 2
    el = default_edge_length(kind)
    c = rng.uniform(-5, 5, size=k)
    g = build_covering_grid(kind, el, c, 8.0)
    dirs = rng.normal(size=(5000, k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = c + dirs * 8.0 * rng.uniform(0, 1, size=(5000, 1)) ** (1 / k)
    v = g.nearest_vertices(pts)
    assert np.all(np.linalg.norm(g.positions[v] - pts, axis=1) <= el + 1e-12)


def test_square_vertex_count_close_to_area_estimate():
    el = default_edge_length(SQUARE)
    g = build_covering_grid(SQUARE, el, [0.0, 0.0], 20.0)
    estimate = math.pi * (20 + 2 * el) ** 2 / el ** 2
    assert estimate / 2 <= g.n_vertices <= 2 * estimate


def test_covering_grid_rejects_short_edges():
    with pytest.raises(InvalidEdgeLengthError):
        build_covering_grid(SQUARE, SQ_L - 0.01, [0, 0], 5.0)


def test_nearest_vertex_on_vertex_and_edge_midpoint():
    g = make_grid(HEX, (8, 4))
    for v in (0, 5, g.n_vertices - 1):
        assert g.nearest_vertex(g.positions[v]) == v
    for a, b in g.edges[:20]:
        mid = (g.positions[a] + g.positions[b]) / 2
        assert g.nearest_vertex(mid) == min(a, b)


@pytest.mark.parametrize("kind,extent", [(HEX, (12, 8)), (SQUARE, (7, 6)), (CUBE, (4, 3, 4))])
def test_nearest_vertex_matches_linear_scan(kind, extent):
    g = make_grid(kind, extent, origin=np.full(3 if kind == CUBE else 2, -1.3))
    rng = np.random.default_rng(2)
    lo, hi = g.positions.min(axis=0), g.positions.max(axis=0)
    pts = rng.uniform(lo, hi, size=(1000, g.dim))
    got = g.nearest_vertices(pts)
    d = np.linalg.norm(pts[:, None] - g.positions[None], axis=2)
    want = d.argmin(axis=1)
    np.testing.assert_array_equal(got, want)


def test_out_of_coverage():
    g = make_grid(SQUARE, (3, 3))
    with pytest.raises(OutOfCoverageError):
        g.nearest_vertex([100.0, 100.0])


def test_descriptor_round_trip():
    g = make_grid(HEX, (10, 4), origin=[1.0, 2.0])
    h = GridGraph.from_descriptor(g.descriptor())
    np.testing.assert_array_equal(h.positions, g.positions)
    np.testing.assert_array_equal(h.edges, g.edges)


# ---------------------------------------------------------------------------
# figure-8 cells and partition
# ---------------------------------------------------------------------------


def is_figure8(grid, cell):
    fa, fb = cell.face_a, cell.face_b
    if set(fa) & set(fb) != set(cell.shared_edge):
        return False
    for cyc in (fa, fb):
        if not all(grid.adjacent(a, b) for a, b in zip(cyc, cyc[1:] + cyc[:1])):
            return False
    m = 6 if grid.kind == HEX else 4
    return len(fa) == len(fb) == m and len(set(cell.vertices)) == 2 * m - 2


def check_partition(grid, cells):
    seen = []
    for c in cells:
        assert is_figure8(grid, c)
        seen.extend(c.vertices)
        seen.extend(c.extra)
    assert len(seen) == len(set(seen)), "cells overlap"
    assert sorted(seen) == list(range(grid.n_vertices)), "cells miss vertices"


def test_partition_single_square_cell():
    g = make_grid(SQUARE, (2, 2))
    assert g.n_vertices == 6
    cells = figure8_partition(g)
    assert len(cells) == 1 and len(cells[0].vertices) == 6 and not cells[0].extra


def test_partition_square_4x6():
    g = make_grid(SQUARE, (4, 6))
    cells = figure8_partition(g)
    assert len(cells) == 4
    assert all(not c.extra for c in cells)
    check_partition(g, cells)


def test_partition_single_hex_cell():
    g = make_grid(HEX, (6, 2))
    cells = figure8_partition(g)
    assert len(cells) == 1 and g.n_vertices == 10 and not cells[0].extra


def test_partition_four_hexagons_in_a_row():
    g = make_grid(HEX, (10, 2))
    assert len(g.faces) == 4 and g.n_vertices == 18
    cells = figure8_partition(g)
    assert len(cells) == 1
    assert len(cells[0].vertices) == 10 and len(cells[0].extra) == 8
    check_partition(g, cells)


@given(st.sampled_from([HEX, SQUARE]), st.integers(2, 16), st.integers(2, 12))
def test_partition_is_disjoint_cover(kind, w, h):
    g = make_grid(kind, (w, h))
    check_partition(g, figure8_partition(g))


def test_partition_cube():
    g = make_grid(CUBE, (4, 3, 3))
    check_partition(g, figure8_partition(g))


def test_partition_error_on_single_face():
    g = GridGraph(SQUARE, SQ_L + 1e-3, [0, 0], (2, 2))
    with pytest.raises(PartitionError):
        figure8_partition(g)


def test_every_figure8_cell_is_well_formed():
    for kind, ext in ((HEX, (10, 6)), (SQUARE, (4, 4)), (CUBE, (3, 3, 2))):
        g = make_grid(kind, ext)
        assert g.figure8_cells
        assert all(is_figure8(g, c) for c in g.figure8_cells)
