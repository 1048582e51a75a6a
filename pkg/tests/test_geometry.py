import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sear.core import Configuration
from sear.geometry import (InfeasibleDensityError, SamplerParams, UndefinedStatisticError,
                           enclosing_ball_of_points, min_enclosing_ball, min_pairwise_distance,
                           min_pairwise_distance_exhaustive, region_radius, sample_instance)
from sear import geometry


def support_set_oracle(pts):
    """Brute force: smallest ball among those spanned by 1..k+1 support points."""
    k = pts.shape[1]
    best = (None, math.inf)
    for m in range(1, k + 2):
        for combo in itertools.combinations(range(len(pts)), m):
            sup = pts[list(combo)]
            if m == 1:
                c = sup[0]
            else:
                a = sup[1:] - sup[0]
                rhs = 0.5 * (a * a).sum(axis=1)
                try:
                    mu = np.linalg.solve(a @ a.T, rhs)
                except np.linalg.LinAlgError:
                    continue
                c = sup[0] + a.T @ mu
            rad = float(np.linalg.norm(sup - c, axis=1).max())
            if rad < best[1] and np.all(np.linalg.norm(pts - c, axis=1) <= rad + 1e-9):
                best = (c, rad)
    return best


def test_single_robot_ball():
    ball = min_enclosing_ball(Configuration([[3.0, 4.0]], 1.0))
    np.testing.assert_allclose(ball.center, [3, 4])
    assert ball.radius == 1.0


def test_two_robot_ball():
    ball = min_enclosing_ball(Configuration([[0.0, 0.0], [4.0, 0.0]], 1.0))
    np.testing.assert_allclose(ball.center, [2, 0], atol=1e-12)
    assert ball.radius == pytest.approx(3.0)


@pytest.mark.parametrize("k", [2, 3])
def test_ball_matches_support_set_oracle(k):
    rng = np.random.default_rng(k)
    for _ in range(20):
        pts = rng.uniform(-10, 10, size=(10, k))
        c, rad = enclosing_ball_of_points(pts)
        oc, orad = support_set_oracle(pts)
        assert rad == pytest.approx(orad, abs=1e-9)
        np.testing.assert_allclose(c, oc, atol=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(1, 25))
def test_ball_permutation_invariant_and_translation_equivariant(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-20, 20, size=(n, 2))
    c, rad = enclosing_ball_of_points(pts)
    c2, rad2 = enclosing_ball_of_points(pts[rng.permutation(n)])
    np.testing.assert_array_equal(c, c2)
    assert rad == rad2
    shift = rng.uniform(-50, 50, size=2)
    c3, rad3 = enclosing_ball_of_points(pts + shift)
    np.testing.assert_allclose(c3, c + shift, atol=1e-8)
    assert rad3 == pytest.approx(rad, abs=1e-8)
    assert np.all(np.linalg.norm(pts - c, axis=1) <= rad + 1e-9)


def test_min_pairwise_examples():
    assert min_pairwise_distance(np.array([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)
    tri = np.array([[0.0, 0.0], [3.0, 0.0], [1.5, 1.5 * math.sqrt(3)]])
    assert min_pairwise_distance(tri) == pytest.approx(3.0)
    with pytest.raises(UndefinedStatisticError):
        min_pairwise_distance(np.zeros((1, 2)))


def test_min_pairwise_matches_exhaustive(rng):
    for k in (2, 3):
        pts = rng.uniform(-50, 50, size=(200, k))
        assert min_pairwise_distance(pts) == min_pairwise_distance_exhaustive(pts)


def test_sampler_single_robot():
    inst = sample_instance(SamplerParams(n=1, seed=3))
    assert inst.n == 1
    assert np.linalg.norm(inst.start.positions[0]) <= region_radius(SamplerParams(n=1))


@pytest.mark.parametrize("k", [2, 3])
def test_sampler_separation_at_zero_gap(k):
    inst = sample_instance(SamplerParams(n=2, delta=0.0, k=k, seed=1))
    assert min_pairwise_distance(inst.start) >= 2.0
    assert min_pairwise_distance(inst.goal) >= 2.0


def test_sampler_is_deterministic():
    a = sample_instance(SamplerParams(n=50, delta=1.0, seed=7))
    b = sample_instance(SamplerParams(n=50, delta=1.0, seed=7))
    assert a.start.positions.tobytes() == b.start.positions.tobytes()
    assert a.goal.positions.tobytes() == b.goal.positions.tobytes()


@given(st.integers(1, 60), st.sampled_from([0.0, 0.5, 2.6]), st.sampled_from([0.0, 20.0]),
       st.sampled_from([2, 3]), st.integers(0, 10_000))
def test_sampler_output_is_valid_and_contained(n, delta, d, k, seed):
    p = SamplerParams(n=n, delta=delta, d=d, k=k, seed=seed)
    inst = sample_instance(p)
    if n > 1:
        assert min_pairwise_distance(inst.start) >= 2.0 + delta - 1e-12
        assert min_pairwise_distance(inst.goal) >= 2.0 + delta - 1e-12
    rad = region_radius(p)
    assert min_enclosing_ball(inst.start).radius <= rad + p.r + 1e-9
    off = np.zeros(k)
    off[0] = d
    assert np.all(np.linalg.norm(inst.goal.positions - off, axis=1) <= rad + 1e-9)


def test_sampler_budget_exhaustion(monkeypatch):
    monkeypatch.setattr(geometry, "REJECTION_BUDGET", 50)
    monkeypatch.setattr(geometry, "region_radius", lambda p: 2.5)
    with pytest.raises(InfeasibleDensityError):
        sample_instance(SamplerParams(n=40, seed=0))
