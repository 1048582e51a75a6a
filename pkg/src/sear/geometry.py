"""Enclosing balls, configuration statistics and the random instance sampler."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .core import Configuration, ContractError, EnclosingBall, ProblemInstance, SearError

HEX_PACKING_DENSITY = math.pi / (2.0 * math.sqrt(3.0))
FCC_PACKING_DENSITY = math.pi / (3.0 * math.sqrt(2.0))
REJECTION_BUDGET = 1_000_000


class UndefinedStatisticError(SearError, ValueError):
    pass


class InfeasibleDensityError(SearError, RuntimeError):
    """Rejection sampling gave up: the requested density is too high."""


# ---------------------------------------------------------------------------
# minimum enclosing ball
# ---------------------------------------------------------------------------


def _ball_through(support: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Smallest ball having every support point on its boundary."""
    if not support:
        return np.zeros(0), -1.0
    p0 = support[0]
    if len(support) == 1:
        return p0.copy(), 0.0
    a = np.array([p - p0 for p in support[1:]])
    rhs = 0.5 * (a * a).sum(axis=1)
    # center = p0 + a.T @ mu, with (a a^T) mu = rhs; lstsq copes with degenerate sets
    mu, *_ = np.linalg.lstsq(a @ a.T, rhs, rcond=None)
    c = p0 + a.T @ mu
    return c, float(max(np.linalg.norm(c - p) for p in support))


def _inside(ball, p, eps) -> bool:
    c, rad = ball
    return rad >= 0 and float(np.linalg.norm(p - c)) <= rad + eps


def _welzl(pts: np.ndarray, end: int, support: list, dim: int, eps: float):
    ball = _ball_through(support)
    if len(support) == dim + 1:
        return ball
    for i in range(end):
        if not _inside(ball, pts[i], eps):
            ball = _welzl(pts, i, support + [pts[i]], dim, eps)
    return ball


def _input_seed(points: np.ndarray) -> int:
    digest = hashlib.blake2b(np.ascontiguousarray(points, dtype=np.float64).tobytes(), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def enclosing_ball_of_points(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball containing all points (no radius added)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] == 0:
        raise ContractError("need at least one point")
    # the shuffle is seeded from the sorted input so the result does not
    # depend on robot order
    canon = pts[np.lexsort(pts.T[::-1])]
    rng = np.random.default_rng(_input_seed(canon))
    shuffled = canon[rng.permutation(canon.shape[0])]
    scale = float(np.abs(pts).max()) + 1.0
    center, rad = _welzl(shuffled, shuffled.shape[0], [], pts.shape[1], 1e-12 * scale)
    return center, rad


def min_enclosing_ball(config: Configuration) -> EnclosingBall:
    center, rad = enclosing_ball_of_points(config.positions)
    return EnclosingBall(center, rad + config.radius)


# ---------------------------------------------------------------------------
# pairwise statistics
# ---------------------------------------------------------------------------


def min_pairwise_distance(config) -> float:
    """Smallest center-to-center distance, via a k-d tree query."""
    pts = config.positions if isinstance(config, Configuration) else np.asarray(config, dtype=np.float64)
    if pts.shape[0] < 2:
        raise UndefinedStatisticError("minimum pairwise distance needs at least two robots")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min())


def min_pairwise_distance_exhaustive(config) -> float:
    pts = config.positions if isinstance(config, Configuration) else np.asarray(config, dtype=np.float64)
    if pts.shape[0] < 2:
        raise UndefinedStatisticError("minimum pairwise distance needs at least two robots")
    best = math.inf
    for i in range(pts.shape[0] - 1):
        d = np.sqrt(((pts[i + 1:] - pts[i]) ** 2).sum(axis=1)).min()
        best = min(best, float(d))
    return best


# ---------------------------------------------------------------------------
# sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerParams:
    n: int
    r: float = 1.0
    delta: float = 0.0
    d: float = 0.0
    k: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("n must be at least 1")
        if self.k not in (2, 3):
            raise ContractError("k must be 2 or 3")
        if not (self.r > 0 and self.delta >= 0 and self.d >= 0):
            raise ContractError("need r > 0, delta >= 0, d >= 0")
        if not math.isfinite(packing_radius(self.n, self.r, self.delta, self.k)):
            raise ContractError("region radius is not finite")


def packing_radius(n: int, r: float, delta: float, k: int = 2) -> float:
    """Approximate radius of the smallest ball holding n balls of radius r + delta/2."""
    a = r + delta / 2.0
    if k == 2:
        return a * (1.0 + math.sqrt(n / HEX_PACKING_DENSITY))
    return a * (1.0 + (n / FCC_PACKING_DENSITY) ** (1.0 / 3.0))


def region_radius(params: SamplerParams) -> float:
    return 1.5 * packing_radius(params.n, params.r, params.delta, params.k)


def _sample_region(rng: np.random.Generator, n: int, k: int, radius: float, min_dist: float,
                   budget: int) -> np.ndarray:
    accepted = np.empty((n, k))
    count = fails = 0
    batch = max(256, 4 * n)
    while count < n:
        cand = rng.uniform(-radius, radius, size=(batch, k))
        count, fails, _ = kernels.reject_fill(cand, radius, min_dist, accepted, count, fails, budget)
        if fails >= budget:
            raise InfeasibleDensityError(
                f"placed {count} of {n} robots before {budget} consecutive rejections")
    return accepted


def sample_instance(params: SamplerParams) -> ProblemInstance:
    """Random start and goal configurations with a uniformly random labeling.

    Start centers lie in a ball of radius 1.5x the packing radius about the
    origin; goal centers in an equal ball about ``(d, 0[, 0])``.  Candidates
    are drawn uniformly from the bounding box and rejected when outside the
    ball or closer than ``2r + delta`` to an accepted center.
    """
    rng = np.random.default_rng(params.seed)
    rad = region_radius(params)
    min_dist = 2.0 * params.r + params.delta
    start = _sample_region(rng, params.n, params.k, rad, min_dist, REJECTION_BUDGET)
    goal = _sample_region(rng, params.n, params.k, rad, min_dist, REJECTION_BUDGET)
    goal = goal[rng.permutation(params.n)]
    goal[:, 0] += params.d
    meta = {"seed": params.seed, "delta": params.delta, "d": params.d}
    # centers are exactly 2r + delta >= 2r apart; strict overlap only at delta == 0
    # boundary contact, which has probability zero under continuous sampling
    return ProblemInstance.from_arrays(start, goal, params.r, meta, check=False)
