import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sear.core import Configuration, Plan, ProblemInstance, validate_plan
from sear.geometry import SamplerParams, min_enclosing_ball, min_pairwise_distance, sample_instance
from sear.grid import HEX, SQUARE, build_covering_grid, default_edge_length, make_grid
from sear.pipeline import (PHASES, AssignmentConflictError, PipelineConfig, assign, concat_fragments, expand,
                           phase_fragment, resolve_lambda, shift, solve)

from conftest import random_separated

HEX_L = 4 / math.sqrt(3)


def as_plan(frag):
    return Plan(frag.trajectories, frag.duration)


def pairwise(p):
    d = np.linalg.norm(p[:, None] - p[None], axis=2)
    return d[np.triu_indices(len(p), 1)]


# ---------------------------------------------------------------------------
# shift
# ---------------------------------------------------------------------------


def test_shift_zero_distance_is_empty():
    pts = np.array([[0.0, 0.0], [3.0, 0.0]])
    frag, shifted = shift(ProblemInstance.from_arrays(pts, pts[::-1], 1.0))
    assert frag.duration == 0.0
    np.testing.assert_array_equal(shifted.start.positions, pts)


def test_shift_three_robots_by_ten():
    start = np.array([[-3.0, 0.0], [0.0, 0.0], [3.0, 0.0]])
    inst = ProblemInstance.from_arrays(start, start + [10.0, 0.0], 1.0)
    frag, shifted = shift(inst)
    assert frag.duration == 10.0
    lengths = [tr.length() for tr in frag.trajectories]
    assert sum(lengths) == 30.0
    np.testing.assert_array_equal(shifted.start.positions, inst.goal.positions)


@given(st.integers(0, 10_000))
def test_shift_aligns_ball_centers(seed):
    inst = sample_instance(SamplerParams(n=12, d=17.0, seed=seed))
    frag, shifted = shift(inst)
    c_s = min_enclosing_ball(shifted.start).center
    c_g = min_enclosing_ball(shifted.goal).center
    np.testing.assert_allclose(c_s, c_g, atol=1e-9)
    assert validate_plan(ProblemInstance.from_arrays(inst.start.positions, shifted.start.positions, 1.0,
                                                     check=False), as_plan(frag)).ok


# ---------------------------------------------------------------------------
# lambda
# ---------------------------------------------------------------------------


def test_lambda_examples():
    assert resolve_lambda(np.array([[0.0, 0.0], [2.0, 0.0]]), HEX_L) == pytest.approx(4 / math.sqrt(3))
    assert resolve_lambda(np.array([[0.0, 0.0], [2 * HEX_L, 0.0]]), HEX_L) == 1.0
    assert resolve_lambda(np.array([[0.0, 0.0], [4.6, 0.0]]), HEX_L) == pytest.approx(2 * HEX_L / 4.6)
    assert 2 * HEX_L / 4.6 == pytest.approx(1.0041, abs=1e-4)
    assert resolve_lambda(np.array([[0.0, 0.0], [4.62, 0.0]]), HEX_L) == 1.0
    assert resolve_lambda(np.array([[1.0, 1.0]]), HEX_L) == 1.0


# ---------------------------------------------------------------------------
# expand
# ---------------------------------------------------------------------------


def test_expand_identity_and_single_robot():
    pts = np.array([[1.0, 2.0], [5.0, 2.0]])
    frag, out = expand(pts, np.zeros(2), 1.0)
    assert frag.duration == 0.0
    np.testing.assert_array_equal(out, pts)
    frag, out = expand(np.array([[3.0, 0.0]]), np.zeros(2), 2.0)
    assert frag.duration == pytest.approx(3.0)
    assert np.linalg.norm(out[0]) == pytest.approx(6.0)


@given(st.integers(0, 2**32 - 1), st.integers(2, 25), st.sampled_from([1.0, 1.5, 1.7, 2.31]))
def test_expand_scales_distances_and_is_collision_free(seed, n, lam):
    rng = np.random.default_rng(seed)
    pts = random_separated(rng, n)
    center = min_enclosing_ball(Configuration(pts, 1.0)).center
    frag, out = expand(pts, center, lam)
    before, after = pairwise(pts), pairwise(out)
    np.testing.assert_allclose(after, lam * before, rtol=0, atol=1e-9)
    assert np.argmin(after) == np.argmin(before) and np.argmax(after) == np.argmax(before)
    expected_T = (lam - 1) * np.linalg.norm(pts - center, axis=1).max()
    assert frag.duration == pytest.approx(expected_T, abs=1e-12)
    inst = ProblemInstance.from_arrays(pts, out, 1.0, check=False)
    assert validate_plan(inst, as_plan(frag)).ok


# ---------------------------------------------------------------------------
# assign
# ---------------------------------------------------------------------------


def test_assign_on_vertex_is_zero_length():
    g = make_grid(HEX, (8, 4), edge_length=HEX_L)
    frag, v = assign(g.positions[[3, 10]], g)
    assert list(v) == [3, 10]
    assert frag.duration == 0.0


def test_assign_two_robots_two_edges_apart():
    g = make_grid(HEX, (12, 6), edge_length=HEX_L)
    c = g.positions[20]
    pts = np.array([c, c + [2 * HEX_L, 0.0]])
    _, v = assign(pts, g)
    assert v[0] != v[1]


def test_assign_conflict_is_reported():
    g = make_grid(SQUARE, (4, 4))
    p = g.positions[5]
    with pytest.raises(AssignmentConflictError):
        assign(np.array([p, p + 0.1]), g)


@pytest.mark.parametrize("kind", [HEX, SQUARE])
def test_assign_after_resolved_expansion(kind):
    rng = np.random.default_rng(21 if kind == HEX else 22)
    el = default_edge_length(kind)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        pts = random_separated(rng, n, min_dist=2.0 + rng.uniform(0, 1))
        center = min_enclosing_ball(Configuration(pts, 1.0)).center
        lam = resolve_lambda(pts, el)
        _, out = expand(pts, center, lam)
        g = build_covering_grid(kind, el, center, max(lam * np.linalg.norm(pts - center, axis=1).max(), el))
        frag, v = assign(out, g)
        assert len(set(v.tolist())) == n
        assert np.all(np.linalg.norm(g.positions[v] - out, axis=1) <= el + 1e-9)
        report = validate_plan(ProblemInstance.from_arrays(out, g.positions[v], 1.0, check=False), as_plan(frag))
        assert report.ok and report.min_distance >= 2.0 - 1e-6


# ---------------------------------------------------------------------------
# whole pipeline
# ---------------------------------------------------------------------------


def test_phase_intervals_partition_the_plan():
    inst = sample_instance(SamplerParams(n=12, d=5.0, seed=3))
    plan, trace, _ = solve(inst)
    assert [p[0] for p in trace.phases] == list(PHASES)
    assert trace.phases[0][1] == 0.0
    for (_, _, a), (_, b, _) in zip(trace.phases, trace.phases[1:]):
        assert a == b
    assert trace.phases[-1][2] == pytest.approx(plan.makespan)
    shift_part = phase_fragment(plan, trace, "shift")
    assert shift_part.makespan == pytest.approx(np.linalg.norm(
        min_enclosing_ball(inst.goal).center - min_enclosing_ball(inst.start).center))


def test_contract_is_reversed_goal_side():
    inst = sample_instance(SamplerParams(n=10, seed=4))
    plan, trace, _ = solve(inst)
    t0, t1 = trace.interval("contract")
    # rerun the goal side forwards and compare at mirrored times
    center = min_enclosing_ball(inst.goal).center
    goal = inst.goal.positions
    frag_e, expanded = expand(goal, center, trace.lambda_goal)
    frag_a, _ = assign(expanded, trace.grid)
    forward = concat_fragments([frag_e, frag_a])
    assert forward.duration == pytest.approx(t1 - t0, abs=1e-9)
    for s in np.linspace(0.0, forward.duration, 23):
        np.testing.assert_allclose(plan.positions_at(t1 - s),
                                   np.array([tr.at(s) for tr in forward.trajectories]), atol=1e-9)


def test_identity_instance():
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    inst = ProblemInstance.from_arrays(pts, pts, 1.0)
    plan, trace, m = solve(inst)
    assert trace.lambda_start == 1.0
    assert trace.discrete_steps == 0
    assert m.optimality_ratio is None
    # only the snap to the lattice and back remains
    assert plan.makespan == pytest.approx(2 * trace.interval("assign")[1] - 2 * trace.interval("assign")[0])


def test_identity_on_vertices_has_zero_makespan():
    # the lattice is anchored on the goal ball center, here the origin
    el = default_edge_length(SQUARE)
    pts = np.array([[-3 * el, 0.0], [3 * el, 0.0], [0.0, 2 * el]])
    inst = ProblemInstance.from_arrays(pts, pts, 1.0)
    plan, trace, _ = solve(inst, PipelineConfig(grid=SQUARE))
    assert np.allclose(min_enclosing_ball(inst.goal).center, 0.0)
    assert trace.lambda_start == 1.0
    assert plan.makespan == pytest.approx(0.0, abs=1e-9)


def test_far_swap_without_expansion():
    inst = ProblemInstance.from_arrays([[0.0, 0.0], [10.0, 0.0]], [[10.0, 0.0], [0.0, 0.0]], 1.0)
    plan, trace, m = solve(inst)
    assert trace.lambda_start == 1.0 and trace.lambda_goal == 1.0
    assert validate_plan(inst, plan).ok
    assert plan.makespan >= 10.0


@pytest.mark.parametrize("kind", [HEX, SQUARE])
def test_twenty_robot_ratio_is_moderate(kind):
    inst = sample_instance(SamplerParams(n=20, seed=0))
    _, trace, m = solve(inst, PipelineConfig(grid=kind))
    assert trace.report.ok
    assert 10 <= m.optimality_ratio <= 300


def test_three_dimensional_instance():
    inst = sample_instance(SamplerParams(n=8, k=3, seed=2))
    plan, trace, _ = solve(inst, PipelineConfig(grid="cube"))
    assert validate_plan(inst, plan).ok
    assert trace.grid.dim == 3


def test_fixed_lambda_and_config_checks():
    from sear.core import ContractError
    inst = sample_instance(SamplerParams(n=6, delta=3.0, seed=1))
    _, trace, _ = solve(inst, PipelineConfig(lam=2.5))
    assert trace.lambda_start == trace.lambda_goal == 2.5
    with pytest.raises(ContractError):
        PipelineConfig(lam=0.5)
    with pytest.raises(ContractError):
        solve(inst, PipelineConfig(grid="cube"))
    with pytest.raises(ContractError):
        solve(inst, PipelineConfig(edge_length=1.0))
